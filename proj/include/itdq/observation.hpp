#pragma once

#include <cstddef>

namespace itdq {

// One position measurement: the particle was found at `next_site` a time
// `delta` after having been measured (or prepared) at `prev_site`.
struct Observation {
  std::size_t prev_site = 0;
  double delta = 0.0;
  std::size_t next_site = 0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

}  // namespace itdq
