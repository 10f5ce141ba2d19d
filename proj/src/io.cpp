#include "flagstat/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "flagstat/error.hpp"
#include "flagstat/synthlab.hpp"
#include "json.hpp"

namespace flagstat::io {

using nlohmann::json;

namespace {

constexpr double kRotationInputTolerance = 1e-6;

[[noreturn]] void parse_fail(const std::string& what) { throw Error(ErrorKind::ParseError, what); }

json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') { ++line; col = 1; } else { ++col; }
    }
    parse_fail("malformed JSON at line " + std::to_string(line) + ", column " + std::to_string(col));
  }
}

const json& field(const json& obj, const char* name, const std::string& where) {
  if (!obj.is_object()) parse_fail(where + " must be an object");
  auto it = obj.find(name);
  if (it == obj.end()) parse_fail(where + " is missing field '" + name + "'");
  return *it;
}

std::vector<double> numbers(const json& arr, const std::string& where) {
  if (!arr.is_array()) parse_fail(where + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) parse_fail(where + "[" + std::to_string(i) + "] is not a number");
    const double v = arr[i].get<double>();
    if (!std::isfinite(v)) parse_fail(where + "[" + std::to_string(i) + "] is not finite");
    out.push_back(v);
  }
  return out;
}

int whole(const json& v, const std::string& where) {
  if (!v.is_number_integer()) parse_fail(where + " must be an integer");
  return v.get<int>();
}

void append_matrix(std::string& out, const Matrix& m) {
  out += '[';
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (r || c) out += ", ";
      out += format_number(m(r, c));
    }
  out += ']';
}

std::string signature_json(const FlagSignature& sig) {
  std::string out = "[";
  for (std::size_t j = 0; j < sig.dims().size(); ++j) {
    if (j) out += ", ";
    out += std::to_string(sig.dims()[j]);
  }
  return out + "]";
}

}  // namespace

FlagSet parse_flag_set(std::string_view text) {
  const json doc = parse_document(text);
  const json& sig_json = field(doc, "signature", "flag set");
  if (!sig_json.is_array()) parse_fail("'signature' must be an array of integers");
  std::vector<int> dims;
  for (std::size_t i = 0; i < sig_json.size(); ++i) dims.push_back(whole(sig_json[i], "signature[" + std::to_string(i) + "]"));
  const int ambient = whole(field(doc, "ambient", "flag set"), "'ambient'");
  FlagSignature sig = FlagSignature(dims, ambient);

  const json& pts = field(doc, "points", "flag set");
  if (!pts.is_array()) parse_fail("'points' must be an array");
  if (pts.empty()) throw Error(ErrorKind::EmptyInput, "'points' is empty");
  FlagSet set{sig, {}};
  const int d = sig.ambient(), k = sig.rank();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::string where = "points[" + std::to_string(i) + "]";
    const std::vector<double> v = numbers(pts[i], where);
    if (v.size() != static_cast<std::size_t>(d) * k) {
      throw Error(ErrorKind::ShapeMismatch, where + " has " + std::to_string(v.size()) + " entries, expected " +
                                                std::to_string(d * k));
    }
    Matrix m(d, k);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < k; ++c) m(r, c) = v[static_cast<std::size_t>(r) * k + c];
    try {
      set.points.push_back(make_flag(std::move(m), sig));
    } catch (const Error& e) {
      throw Error(e.kind(), where + ": " + e.what());
    }
  }
  return set;
}

std::vector<RigidMotion> parse_motion_set(std::string_view text) {
  const json doc = parse_document(text);
  const json& arr = field(doc, "motions", "motion set");
  if (!arr.is_array()) parse_fail("'motions' must be an array");
  if (arr.empty()) throw Error(ErrorKind::EmptyInput, "'motions' is empty");
  std::vector<RigidMotion> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "motions[" + std::to_string(i) + "]";
    const std::vector<double> r = numbers(field(arr[i], "rotation", where), where + ".rotation");
    const std::vector<double> t = numbers(field(arr[i], "translation", where), where + ".translation");
    if (r.size() != 9) throw Error(ErrorKind::ShapeMismatch, where + ".rotation needs 9 entries");
    if (t.size() != 3) throw Error(ErrorKind::ShapeMismatch, where + ".translation needs 3 entries");
    Matrix3 rot;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) rot(a, b) = r[a * 3 + b];
    const double dev = std::max(orthonormality_error(rot), std::abs(rot.determinant() - 1.0));
    if (dev > kRotationInputTolerance) {
      throw Error(ErrorKind::InvalidInput, where + ".rotation is not a rotation (deviation " + format_number(dev) + ")");
    }
    out.emplace_back(project_to_so3(rot), Vector3(t[0], t[1], t[2]));
  }
  return out;
}

WeightVector parse_weights(std::string_view text) {
  const json doc = parse_document(text);
  const json& arr = doc.is_object() ? field(doc, "weights", "weights file") : doc;
  try {
    return WeightVector(numbers(arr, "weights"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ParseError) throw;
    throw Error(ErrorKind::InvalidInput, std::string("weights: ") + e.what());
  }
}

std::string flag_point_json(const FlagPoint& point) {
  std::string out = "{\"signature\": " + signature_json(point.signature()) +
                    ", \"ambient\": " + std::to_string(point.signature().ambient()) + ", \"point\": ";
  append_matrix(out, point.rep());
  return out + "}";
}

std::string flag_set_json(const FlagSet& set) {
  std::string out = "{\"signature\": " + signature_json(set.signature) +
                    ", \"ambient\": " + std::to_string(set.signature.ambient()) + ", \"points\": [\n";
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    out += "  ";
    append_matrix(out, set.points[i].rep());
    out += i + 1 < set.points.size() ? ",\n" : "\n";
  }
  return out + "]}\n";
}

std::string motion_json(const RigidMotion& motion) {
  std::string out = "{\"rotation\": ";
  append_matrix(out, motion.rotation());
  out += ", \"translation\": ";
  append_matrix(out, motion.translation().transpose());
  return out + "}";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::string& path, std::string_view contents) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::InvalidInput, "cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out.flush()) throw Error(ErrorKind::InvalidInput, "write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::InvalidInput, "cannot replace '" + path + "'");
  }
}

}  // namespace flagstat::io
