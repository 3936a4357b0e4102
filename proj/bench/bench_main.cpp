// Serial reference vs OpenMP kernels, plus whole-solver runs in both modes.
// Usage: cidyn-bench [--quick]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <string>

#include "cidyn/kernels.hpp"
#include "cidyn/scenarios.hpp"

using namespace cidyn;
using kernels::Exec;

namespace {

double seconds(const std::function<void()>& f, int reps) {
  f();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

void row(const char* name, double serial, double parallel, bool identical) {
  std::printf("%-28s %12.3e %12.3e %8.2fx  %s\n", name, serial, parallel, serial / parallel,
              identical ? "identical" : "DIFFERENT");
}

DenseMatrix random_dense(Index rows, Index cols) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  DenseMatrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = Complex(g(rng), g(rng));
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
  std::printf("%-28s %12s %12s %9s\n", "kernel", "serial [s]", "parallel [s]", "speedup");

  SystemParams p;
  p.basis = quick ? BasisSpec{10, 6} : BasisSpec{20, 10};
  const SparseMatrix h = build_hamiltonian(p).sparse();
  const DenseMatrix rho = random_dense(h.rows(), h.cols());
  const int reps = quick ? 3 : 10;

  {
    DenseMatrix ys = DenseMatrix::Zero(h.rows(), h.cols()), yp = ys;
    const double s = seconds([&] { kernels::spmm_add(Exec::serial, h, rho, Complex(0, -1), ys); }, reps);
    const double q = seconds([&] { kernels::spmm_add(Exec::parallel, h, rho, Complex(0, -1), yp); }, reps);
    row("spmm_add (H rho)", s, q, ys == yp);
  }
  {
    Complex a, b;
    const double s = seconds([&] { a = kernels::trace_product(Exec::serial, rho, h); }, reps);
    const double q = seconds([&] { b = kernels::trace_product(Exec::parallel, rho, h); }, reps);
    row("trace_product", s, q, a == b);
  }
  {
    DenseMatrix a = rho, b = rho;
    const double s = seconds([&] { kernels::hermitize(Exec::serial, a); }, reps);
    const double q = seconds([&] { kernels::hermitize(Exec::parallel, b); }, reps);
    row("hermitize", s, q, a == b);
  }

  // whole solvers
  RunConfig c = scenario_defaults("fig5-weak");
  c.params.basis = quick ? BasisSpec{8, 5} : BasisSpec{16, 8};
  c.t1 = quick ? 1.0 : 4.0;
  RunOptions serial, parallel;
  serial.exec = Exec::serial;
  SimulationResult rs, rp;
  {
    const double s = seconds([&] { rs = simulate(c, serial); }, 1);
    const double q = seconds([&] { rp = simulate(c, parallel); }, 1);
    row("lindblad run", s, q, rs.series.tracks == rp.series.tracks);
  }
  c.solver = Solver::trajectories;
  c.n_traj = quick ? 20 : 200;
  {
    const double s = seconds([&] { rs = simulate(c, serial); }, 1);
    const double q = seconds([&] { rp = simulate(c, parallel); }, 1);
    row("trajectory batch", s, q, rs.series.tracks == rp.series.tracks);
  }
  return 0;
}
