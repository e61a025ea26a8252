#ifndef COVBAL_RANDOM_H_
#define COVBAL_RANDOM_H_

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace covbal {

// Seeded generator with platform-stable output. The engine is
// std::mt19937_64, whose sequence the standard fixes exactly; bounded draws
// use rejection sampling here rather than std::uniform_int_distribution,
// whose algorithm is implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t Next() { return engine_(); }

  // Uniform in [0, bound). bound must be positive.
  uint64_t UniformBelow(uint64_t bound);

  template <typename T>
  void Shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[UniformBelow(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace covbal

#endif  // COVBAL_RANDOM_H_
