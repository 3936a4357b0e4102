#pragma once

#include <omp.h>

#define CIDYN_PRAGMA(x) _Pragma(#x)
#define CIDYN_OMP_PARALLEL_FOR CIDYN_PRAGMA(omp parallel for schedule(static))
#define CIDYN_OMP_PARALLEL_FOR_DYNAMIC CIDYN_PRAGMA(omp parallel for schedule(dynamic, 1))
