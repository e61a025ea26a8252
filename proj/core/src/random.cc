#include "covbal/random.h"

#include <limits>

namespace covbal {

uint64_t Rng::UniformBelow(uint64_t bound) {
  // Reject the top partial block so every residue is equally likely.
  const uint64_t limit =
      std::numeric_limits<uint64_t>::max() -
      std::numeric_limits<uint64_t>::max() % bound;
  uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

}  // namespace covbal
