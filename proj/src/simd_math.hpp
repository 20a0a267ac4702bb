#pragma once

#include <math.h>

// glibc ships vector variants of exp in libmvec. Declaring them lets GCC vectorize the
// `#pragma omp simd` loops below; elsewhere the loops stay scalar and give the same
// results up to a few ulp.
#if defined(__GNUC__) && !defined(__clang__) && defined(__x86_64__) && defined(__GLIBC__)
extern "C" double exp(double) noexcept __attribute__((simd("notinbranch")));
#endif
