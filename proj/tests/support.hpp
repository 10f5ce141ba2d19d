#pragma once

#include <vector>

#include "flagstat/flag.hpp"
#include "flagstat/motion.hpp"
#include "flagstat/numerics.hpp"
#include "flagstat/rng.hpp"
#include "flagstat/stiefel.hpp"

namespace flagstat::testing {

inline FlagPoint random_flag(RngStream& rng, const FlagSignature& sig) {
  return make_flag(random_stiefel(rng, sig.ambient(), sig.rank()), sig);
}

inline std::vector<FlagPoint> random_flags(RngStream& rng, const FlagSignature& sig, int count) {
  std::vector<FlagPoint> out;
  for (int i = 0; i < count; ++i) out.push_back(random_flag(rng, sig));
  return out;
}

// Random strictly increasing dims below ambient.
inline FlagSignature random_signature(RngStream& rng, int max_ambient) {
  const int d = 2 + static_cast<int>(rng.next_u64() % (max_ambient - 1));
  std::vector<int> dims;
  for (int v = 1; v < d; ++v)
    if (rng.uniform() < 0.4) dims.push_back(v);
  if (dims.empty()) dims.push_back(1 + static_cast<int>(rng.next_u64() % (d - 1)));
  return FlagSignature(dims, d);
}

inline Matrix4 random_so4(RngStream& rng) {
  Matrix4 q = thin_qr(gaussian_matrix(rng, 4, 4)).q;
  if (q.determinant() < 0) q.col(3) *= -1.0;
  return q;
}

inline Vector3 random_unit(RngStream& rng) {
  Vector3 v(rng.normal(), rng.normal(), rng.normal());
  return v.normalized();
}

}  // namespace flagstat::testing
