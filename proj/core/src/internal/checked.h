#ifndef COVBAL_INTERNAL_CHECKED_H_
#define COVBAL_INTERNAL_CHECKED_H_

#include <cstdint>

#include "covbal/error.h"

namespace covbal::internal {

inline int64_t CheckedAdd(int64_t a, int64_t b) {
  int64_t out;
  if (__builtin_add_overflow(a, b, &out)) {
    throw Error(ErrorCode::kOverflow, "integer overflow in addition");
  }
  return out;
}

inline int64_t CheckedMul(int64_t a, int64_t b) {
  int64_t out;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw Error(ErrorCode::kOverflow, "integer overflow in multiplication");
  }
  return out;
}

}  // namespace covbal::internal

#endif  // COVBAL_INTERNAL_CHECKED_H_
