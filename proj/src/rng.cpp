#include "levyap/rng.hpp"

namespace levyap {

Stream make_stream(std::uint64_t master_seed, std::uint64_t index) {
  return Stream(master_seed ^ (index * kGoldenGamma));
}

}  // namespace levyap
