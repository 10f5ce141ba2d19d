#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "flagstat/flag.hpp"
#include "flagstat/motion.hpp"

namespace flagstat::io {

struct FlagSet {
  FlagSignature signature;
  std::vector<FlagPoint> points;
};

// {"signature": [n_1, ...], "ambient": d, "points": [[row-major d x d_k], ...]}
FlagSet parse_flag_set(std::string_view text);

// {"motions": [{"rotation": [9 row-major], "translation": [3]}, ...]}
// Rotations within 1e-6 of SO(3) are projected onto it.
std::vector<RigidMotion> parse_motion_set(std::string_view text);

// A bare JSON array, or {"weights": [...]}.
WeightVector parse_weights(std::string_view text);

std::string flag_set_json(const FlagSet& set);
std::string flag_point_json(const FlagPoint& point);
std::string motion_json(const RigidMotion& motion);

std::string read_file(const std::string& path);
// Writes to a sibling temp file, then renames over the target.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace flagstat::io
