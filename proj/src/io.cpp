#include "splatline/io.hpp"

#include <unistd.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace splatline {

namespace {

using json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failure: " + path.string());
  return std::move(buf).str();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

double parse_double_or(const std::string_view token, const std::string& what) {
  double v = 0.0;
  const auto* begin = token.data();
  const auto* end = token.data() + token.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw ConfigError("cannot parse number '" + std::string(token) + "' for " +
                      what);
  return v;
}

long parse_int_or(const std::string_view token, const std::string& what) {
  long v = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
    throw ConfigError("cannot parse integer '" + std::string(token) + "' for " +
                      what);
  return v;
}

}  // namespace

std::string fmt_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void atomic_write(const std::filesystem::path& path,
                  std::string_view content) {
  std::error_code ec;
  if (!path.parent_path().empty())
    std::filesystem::create_directories(path.parent_path(), ec);
  const std::filesystem::path tmp =
      path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + tmp.string());
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out.good()) {
      out.close();
      std::filesystem::remove(tmp, ec);
      throw IoError("write failure: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " into place: " +
                  path.string());
  }
}

// --- PLY ------------------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary PLY reader assumes a little-endian host");

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::i8:
    case PlyType::u8:
      return 1;
    case PlyType::i16:
    case PlyType::u16:
      return 2;
    case PlyType::i32:
    case PlyType::u32:
    case PlyType::f32:
      return 4;
    case PlyType::f64:
      return 8;
  }
  return 0;
}

bool ply_is_float(PlyType t) {
  return t == PlyType::f32 || t == PlyType::f64;
}

PlyType ply_type(const std::string& token, std::size_t offset) {
  if (token == "char" || token == "int8") return PlyType::i8;
  if (token == "uchar" || token == "uint8") return PlyType::u8;
  if (token == "short" || token == "int16") return PlyType::i16;
  if (token == "ushort" || token == "uint16") return PlyType::u16;
  if (token == "int" || token == "int32") return PlyType::i32;
  if (token == "uint" || token == "uint32") return PlyType::u32;
  if (token == "float" || token == "float32") return PlyType::f32;
  if (token == "double" || token == "float64") return PlyType::f64;
  throw IoError("unknown PLY property type '" + token + "' at byte " +
                std::to_string(offset));
}

struct PlyProp {
  std::string name;
  bool is_list = false;
  PlyType count_type = PlyType::u8;
  PlyType type = PlyType::f32;
};

struct PlyElem {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProp> props;
};

struct PlyHeader {
  bool binary = false;
  std::vector<PlyElem> elements;
  std::size_t body_offset = 0;
};

PlyHeader parse_ply_header(const std::string& data,
                           const std::string& path_str) {
  PlyHeader hdr;
  std::size_t pos = 0;
  bool saw_magic = false, saw_format = false, done = false;

  auto fail = [&](const std::string& msg, std::size_t at) -> void {
    throw IoError("malformed PLY header in " + path_str + " at byte " +
                  std::to_string(at) + ": " + msg);
  };

  while (pos < data.size() && !done) {
    const std::size_t line_start = pos;
    std::size_t eol = data.find('\n', pos);
    if (eol == std::string::npos) fail("unterminated header line", line_start);
    std::string line = data.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (!saw_magic) {
      if (word != "ply") fail("missing 'ply' magic", line_start);
      saw_magic = true;
      continue;
    }
    if (word == "comment" || word == "obj_info" || word.empty()) continue;
    if (word == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii")
        hdr.binary = false;
      else if (fmt == "binary_little_endian")
        hdr.binary = true;
      else if (fmt == "binary_big_endian")
        throw IoError("big-endian binary PLY is not supported (" + path_str +
                      "); re-export as ascii or binary_little_endian");
      else
        fail("unknown format '" + fmt + "'", line_start);
      saw_format = true;
    } else if (word == "element") {
      std::string name, count;
      ls >> name >> count;
      if (name.empty() || count.empty()) fail("incomplete element", line_start);
      long n = 0;
      const auto res =
          std::from_chars(count.data(), count.data() + count.size(), n);
      if (res.ec != std::errc{} || n < 0)
        fail("bad element count '" + count + "'", line_start);
      hdr.elements.push_back(
          PlyElem{name, static_cast<std::size_t>(n), {}});
    } else if (word == "property") {
      if (hdr.elements.empty()) fail("property before element", line_start);
      std::string t1;
      ls >> t1;
      PlyProp prop;
      if (t1 == "list") {
        std::string ct, vt;
        ls >> ct >> vt >> prop.name;
        prop.is_list = true;
        prop.count_type = ply_type(ct, line_start);
        prop.type = ply_type(vt, line_start);
      } else {
        prop.type = ply_type(t1, line_start);
        ls >> prop.name;
      }
      if (prop.name.empty()) fail("property without name", line_start);
      hdr.elements.back().props.push_back(prop);
    } else if (word == "end_header") {
      done = true;
    } else {
      fail("unknown keyword '" + word + "'", line_start);
    }
  }
  if (!done)
    throw IoError("malformed PLY header in " + path_str +
                  ": missing end_header");
  if (!saw_format)
    throw IoError("malformed PLY header in " + path_str +
                  ": missing format line");
  hdr.body_offset = pos;
  return hdr;
}

// Sequential binary cursor with bounds checks.
class BinaryCursor {
 public:
  BinaryCursor(const std::string& data, std::size_t pos,
               const std::string& path)
      : data_(data), pos_(pos), path_(path) {}

  double read(PlyType t) {
    const std::size_t sz = ply_size(t);
    need(sz);
    const char* p = data_.data() + pos_;
    pos_ += sz;
    switch (t) {
      case PlyType::i8: return static_cast<double>(static_cast<std::int8_t>(*p));
      case PlyType::u8: return static_cast<double>(static_cast<std::uint8_t>(*p));
      case PlyType::i16: return from<std::int16_t>(p);
      case PlyType::u16: return from<std::uint16_t>(p);
      case PlyType::i32: return from<std::int32_t>(p);
      case PlyType::u32: return from<std::uint32_t>(p);
      case PlyType::f32: return from<float>(p);
      case PlyType::f64: return from<double>(p);
    }
    return 0.0;
  }

  void skip(std::size_t bytes) {
    need(bytes);
    pos_ += bytes;
  }

  std::size_t pos() const { return pos_; }

 private:
  template <typename T>
  static double from(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return static_cast<double>(v);
  }

  void need(std::size_t bytes) {
    if (pos_ + bytes > data_.size())
      throw IoError("truncated PLY data in " + path_ + " at byte " +
                    std::to_string(pos_));
  }

  const std::string& data_;
  std::size_t pos_;
  const std::string path_;
};

// Whitespace tokenizer over the ASCII body.
class AsciiCursor {
 public:
  AsciiCursor(const std::string& data, std::size_t pos,
              const std::string& path)
      : data_(data), pos_(pos), path_(path) {}

  double read() {
    skip_ws();
    if (pos_ >= data_.size())
      throw IoError("truncated PLY data in " + path_ + " at byte " +
                    std::to_string(pos_));
    double v = 0.0;
    const auto res =
        std::from_chars(data_.data() + pos_, data_.data() + data_.size(), v);
    if (res.ec != std::errc{})
      throw IoError("bad numeric value in " + path_ + " at byte " +
                    std::to_string(pos_));
    pos_ = static_cast<std::size_t>(res.ptr - data_.data());
    return v;
  }

 private:
  void skip_ws() {
    while (pos_ < data_.size() &&
           std::isspace(static_cast<unsigned char>(data_[pos_])))
      ++pos_;
  }

  const std::string& data_;
  std::size_t pos_;
  const std::string path_;
};

std::size_t checked_list_count(double raw, std::size_t at,
                               const std::string& path) {
  if (!(raw >= 0) || raw > 1e9 || raw != std::floor(raw))
    throw IoError("bad PLY list count in " + path + " at byte " +
                  std::to_string(at));
  return static_cast<std::size_t>(raw);
}

}  // namespace

PlyLoadResult load_ply(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  const std::string path_str = path.string();
  const PlyHeader hdr = parse_ply_header(data, path_str);

  const PlyElem* vertex = nullptr;
  for (const PlyElem& e : hdr.elements)
    if (e.name == "vertex") vertex = &e;
  if (vertex == nullptr)
    throw IoError("PLY file " + path_str + " has no vertex element");

  int ix = -1, iy = -1, iz = -1;
  for (std::size_t k = 0; k < vertex->props.size(); ++k) {
    const PlyProp& p = vertex->props[k];
    if (p.is_list) continue;
    if (p.name == "x") ix = static_cast<int>(k);
    if (p.name == "y") iy = static_cast<int>(k);
    if (p.name == "z") iz = static_cast<int>(k);
  }
  if (ix < 0 || iy < 0 || iz < 0)
    throw IoError("PLY file " + path_str +
                  " is missing scalar x/y/z vertex properties");
  for (const int k : {ix, iy, iz})
    if (!ply_is_float(vertex->props[static_cast<std::size_t>(k)].type))
      throw IoError("PLY file " + path_str +
                    ": x/y/z must be float or double properties");

  PlyLoadResult result;
  result.declared_vertices = vertex->count;
  result.cloud.points.reserve(vertex->count);

  auto handle_vertex = [&](const Vec3& p) {
    if (is_finite(p))
      result.cloud.points.push_back(p);
    else
      ++result.nonfinite_skipped;
  };

  if (hdr.binary) {
    BinaryCursor cur(data, hdr.body_offset, path_str);
    for (const PlyElem& elem : hdr.elements) {
      const bool is_vertex = &elem == vertex;
      // Fixed-size rows without lists can be skipped wholesale.
      bool has_list = false;
      std::size_t row_bytes = 0;
      for (const PlyProp& p : elem.props) {
        has_list = has_list || p.is_list;
        row_bytes += p.is_list ? 0 : ply_size(p.type);
      }
      if (!is_vertex && !has_list) {
        cur.skip(row_bytes * elem.count);
        continue;
      }
      for (std::size_t row = 0; row < elem.count; ++row) {
        Vec3 v = Vec3::Zero();
        for (std::size_t k = 0; k < elem.props.size(); ++k) {
          const PlyProp& p = elem.props[k];
          if (p.is_list) {
            const std::size_t n = checked_list_count(
                cur.read(p.count_type), cur.pos(), path_str);
            cur.skip(n * ply_size(p.type));
            continue;
          }
          const bool wanted =
              is_vertex && (static_cast<int>(k) == ix ||
                            static_cast<int>(k) == iy ||
                            static_cast<int>(k) == iz);
          if (wanted) {
            const double val = cur.read(p.type);
            if (static_cast<int>(k) == ix) v.x() = val;
            if (static_cast<int>(k) == iy) v.y() = val;
            if (static_cast<int>(k) == iz) v.z() = val;
          } else {
            cur.skip(ply_size(p.type));
          }
        }
        if (is_vertex) handle_vertex(v);
      }
    }
  } else {
    AsciiCursor cur(data, hdr.body_offset, path_str);
    for (const PlyElem& elem : hdr.elements) {
      const bool is_vertex = &elem == vertex;
      for (std::size_t row = 0; row < elem.count; ++row) {
        Vec3 v = Vec3::Zero();
        for (std::size_t k = 0; k < elem.props.size(); ++k) {
          const PlyProp& p = elem.props[k];
          if (p.is_list) {
            const std::size_t n =
                checked_list_count(cur.read(), 0, path_str);
            for (std::size_t t = 0; t < n; ++t) cur.read();
            continue;
          }
          const double val = cur.read();
          if (is_vertex) {
            if (static_cast<int>(k) == ix) v.x() = val;
            if (static_cast<int>(k) == iy) v.y() = val;
            if (static_cast<int>(k) == iz) v.z() = val;
          }
        }
        if (is_vertex) handle_vertex(v);
      }
    }
  }

  for (const Vec3& p : result.cloud.points) result.cloud.bbox.extend(p);
  return result;
}

void save_ply(const std::vector<Vec3>& points,
              const std::filesystem::path& path, bool binary) {
  std::string out;
  out += "ply\n";
  out += binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n";
  out += "element vertex " + std::to_string(points.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  out += "end_header\n";
  if (binary) {
    out.reserve(out.size() + points.size() * 12);
    for (const Vec3& p : points) {
      const float xyz[3] = {static_cast<float>(p.x()),
                            static_cast<float>(p.y()),
                            static_cast<float>(p.z())};
      out.append(reinterpret_cast<const char*>(xyz), sizeof xyz);
    }
  } else {
    for (const Vec3& p : points) {
      out += fmt_g9(static_cast<float>(p.x()));
      out += ' ';
      out += fmt_g9(static_cast<float>(p.y()));
      out += ' ';
      out += fmt_g9(static_cast<float>(p.z()));
      out += '\n';
    }
  }
  atomic_write(path, out);
}

GaussianCloud downsample_cloud(const GaussianCloud& cloud, double fraction) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw ConfigError("downsample fraction must be in (0, 1]");
  if (fraction == 1.0) return cloud;
  std::vector<Vec3> kept;
  kept.reserve(static_cast<std::size_t>(
      static_cast<double>(cloud.points.size()) * fraction) + 1);
  double acc = 0.0;
  for (const Vec3& p : cloud.points) {
    const double next = acc + fraction;
    if (std::floor(next) > std::floor(acc) || next >= 1.0) {
      kept.push_back(p);
      acc = next - 1.0;
    } else {
      acc = next;
    }
  }
  return make_cloud(std::move(kept));
}

// --- segment files ----------------------------------------------------

SegmentsLoadResult load_segments(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  const std::string path_str = path.string();
  SegmentsLoadResult result;

  std::size_t pos = 0;
  std::size_t lineno = 0;
  while (pos <= data.size()) {
    std::size_t eol = data.find('\n', pos);
    if (eol == std::string::npos) eol = data.size();
    std::string_view line(data.data() + pos, eol - pos);
    pos = eol + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (eol == data.size()) break;
      continue;
    }

    double vals[6];
    int count = 0;
    const char* it = line.data();
    const char* end = line.data() + line.size();
    while (it < end) {
      while (it < end && std::isspace(static_cast<unsigned char>(*it))) ++it;
      if (it >= end) break;
      if (count == 6)
        throw IoError(path_str + ":" + std::to_string(lineno) +
                      ": expected 6 values per segment line");
      double v = 0.0;
      const auto res = std::from_chars(it, end, v);
      if (res.ec != std::errc{})
        throw IoError(path_str + ":" + std::to_string(lineno) +
                      ": cannot parse value");
      vals[count++] = v;
      it = res.ptr;
    }
    if (count != 6)
      throw IoError(path_str + ":" + std::to_string(lineno) + ": expected 6 values, got " +
                    std::to_string(count));
    for (const double v : vals)
      if (!std::isfinite(v))
        throw IoError(path_str + ":" + std::to_string(lineno) +
                      ": non-finite value");
    const Vec3 a(vals[0], vals[1], vals[2]);
    const Vec3 b(vals[3], vals[4], vals[5]);
    if ((b - a).norm() < kMinSegmentLength)
      ++result.degenerate_skipped;
    else
      result.segments.emplace_back(a, b);
    if (eol == data.size()) break;
  }
  return result;
}

void save_segments(const std::vector<Segment>& segments,
                   const std::filesystem::path& path) {
  std::string out;
  for (const Segment& s : segments) {
    out += fmt_g9(s.a().x()) + ' ' + fmt_g9(s.a().y()) + ' ' +
           fmt_g9(s.a().z()) + ' ' + fmt_g9(s.b().x()) + ' ' +
           fmt_g9(s.b().y()) + ' ' + fmt_g9(s.b().z()) + '\n';
  }
  atomic_write(path, out);
}

// --- configuration ----------------------------------------------------

void Config::validate() const {
  try {
    pipeline.validate();
    eval.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (octree_depth < 1) throw ConfigError("config: octree_depth must be >= 1");
  if (leaf_capacity < 1)
    throw ConfigError("config: leaf_capacity must be >= 1");
  if (!(bbox_pad >= 0.0))
    throw ConfigError("config: bbox_pad must be >= 0");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "r",
      "xi",
      "lambda_sim",
      "cluster_c",
      "crop_max_iters",
      "crop_min_interval",
      "crop_window_fraction",
      "crop_density_ratio",
      "merge_gap_density_factor",
      "overlap_semantics",
      "similarity_branch",
      "eval_radius",
      "score_scaler",
      "radii",
      "octree_depth",
      "leaf_capacity",
      "bbox_pad"};
  return keys;
}

void apply_config_override(Config& cfg, const std::string& key,
                           const std::string& value) {
  const std::string_view v = trim(value);
  if (key == "r")
    cfg.pipeline.working_radius = parse_double_or(v, key);
  else if (key == "xi")
    cfg.pipeline.outlier_scaler = parse_double_or(v, key);
  else if (key == "lambda_sim")
    cfg.pipeline.lambda_sim = parse_double_or(v, key);
  else if (key == "cluster_c")
    cfg.pipeline.cluster_c = parse_double_or(v, key);
  else if (key == "crop_max_iters")
    cfg.pipeline.crop_max_iters = static_cast<int>(parse_int_or(v, key));
  else if (key == "crop_min_interval")
    cfg.pipeline.crop_min_interval = parse_double_or(v, key);
  else if (key == "crop_window_fraction")
    cfg.pipeline.crop_window_fraction = parse_double_or(v, key);
  else if (key == "crop_density_ratio")
    cfg.pipeline.crop_density_ratio = parse_double_or(v, key);
  else if (key == "merge_gap_density_factor")
    cfg.pipeline.merge_gap_density_factor = parse_double_or(v, key);
  else if (key == "overlap_semantics") {
    try {
      cfg.pipeline.overlap_semantics =
          overlap_semantics_from_string(std::string(v));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "similarity_branch") {
    try {
      cfg.pipeline.similarity_branch =
          similarity_branch_from_string(std::string(v));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "eval_radius")
    cfg.eval.eval_radius = parse_double_or(v, key);
  else if (key == "score_scaler")
    cfg.eval.score_scaler = parse_double_or(v, key);
  else if (key == "radii") {
    std::vector<double> radii;
    std::size_t start = 0;
    const std::string vs(v);
    while (start <= vs.size()) {
      std::size_t comma = vs.find(',', start);
      if (comma == std::string::npos) comma = vs.size();
      const std::string_view item = trim(std::string_view(vs).substr(start, comma - start));
      if (!item.empty()) radii.push_back(parse_double_or(item, key));
      start = comma + 1;
    }
    if (radii.empty()) throw ConfigError("radii must list at least one value");
    cfg.eval.radius_sweep = std::move(radii);
  } else if (key == "octree_depth")
    cfg.octree_depth = static_cast<int>(parse_int_or(v, key));
  else if (key == "leaf_capacity")
    cfg.leaf_capacity = static_cast<int>(parse_int_or(v, key));
  else if (key == "bbox_pad")
    cfg.bbox_pad = parse_double_or(v, key);
  else {
    std::string keys;
    for (const std::string& k : config_keys()) {
      if (!keys.empty()) keys += ", ";
      keys += k;
    }
    throw ConfigError("unknown config key '" + key + "'; valid keys: " + keys);
  }
}

Config load_config(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  Config cfg;
  std::size_t pos = 0;
  std::size_t lineno = 0;
  while (pos <= data.size()) {
    std::size_t eol = data.find('\n', pos);
    if (eol == std::string::npos) eol = data.size();
    std::string_view line(data.data() + pos, eol - pos);
    const bool last = eol == data.size();
    pos = eol + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      const std::size_t eq = line.find('=');
      if (eq == std::string_view::npos)
        throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                          ": expected key = value");
      const std::string key(trim(line.substr(0, eq)));
      const std::string value(trim(line.substr(eq + 1)));
      apply_config_override(cfg, key, value);
    }
    if (last) break;
  }
  cfg.validate();
  return cfg;
}

namespace {

std::vector<std::pair<std::string, std::string>> config_pairs(
    const Config& cfg) {
  std::string radii;
  for (const double r : cfg.eval.radius_sweep) {
    if (!radii.empty()) radii += ',';
    radii += fmt_g9(r);
  }
  return {
      {"r", fmt_g9(cfg.pipeline.working_radius)},
      {"xi", fmt_g9(cfg.pipeline.outlier_scaler)},
      {"lambda_sim", fmt_g9(cfg.pipeline.similarity_weight())},
      {"cluster_c", fmt_g9(cfg.pipeline.cluster_c)},
      {"crop_max_iters", std::to_string(cfg.pipeline.crop_max_iters)},
      {"crop_min_interval", fmt_g9(cfg.pipeline.crop_min_interval)},
      {"crop_window_fraction", fmt_g9(cfg.pipeline.crop_window_fraction)},
      {"crop_density_ratio", fmt_g9(cfg.pipeline.crop_density_ratio)},
      {"merge_gap_density_factor",
       fmt_g9(cfg.pipeline.merge_gap_density_factor)},
      {"overlap_semantics", to_string(cfg.pipeline.overlap_semantics)},
      {"similarity_branch", to_string(cfg.pipeline.similarity_branch)},
      {"eval_radius", fmt_g9(cfg.eval.eval_radius)},
      {"score_scaler", fmt_g9(cfg.eval.score_scaler)},
      {"radii", radii},
      {"octree_depth", std::to_string(cfg.octree_depth)},
      {"leaf_capacity", std::to_string(cfg.leaf_capacity)},
      {"bbox_pad", fmt_g9(cfg.bbox_pad)},
  };
}

}  // namespace

std::string config_to_text(const Config& cfg) {
  std::string out;
  for (const auto& [k, v] : config_pairs(cfg)) out += k + " = " + v + "\n";
  return out;
}

void save_config(const Config& cfg, const std::filesystem::path& path) {
  atomic_write(path, config_to_text(cfg));
}

// --- reports ----------------------------------------------------------

namespace {

void append_eval_pairs(const EvalReport& rep, const std::string& prefix,
                       std::string& out) {
  out += prefix + "e_rms_cm = " + fmt_g9(rep.e_rms_cm) + "\n";
  out += prefix + "r_covered_pct = " + fmt_g9(rep.r_covered_pct) + "\n";
  if (rep.r_l) out += prefix + "r_l = " + fmt_g9(*rep.r_l) + "\n";
  if (rep.score) out += prefix + "score = " + fmt_g9(*rep.score) + "\n";
  out += prefix + "covered_total = " + std::to_string(rep.covered_total) + "\n";
  out += prefix + "cloud_total = " + std::to_string(rep.cloud_total) + "\n";
  out += prefix +
         "covered_multiplicity = " + std::to_string(rep.covered_multiplicity) +
         "\n";
  out += prefix + "segment_count = " + std::to_string(rep.per_segment.size()) +
         "\n";
  out += prefix + "total_length_m = " + fmt_g9(rep.total_length) + "\n";
}

json eval_to_json_obj(const EvalReport& rep) {
  json j;
  j["e_rms_cm"] = rep.e_rms_cm;
  j["r_covered_pct"] = rep.r_covered_pct;
  if (rep.r_l) j["r_l"] = *rep.r_l;
  if (rep.score) j["score"] = *rep.score;
  j["covered_total"] = rep.covered_total;
  j["cloud_total"] = rep.cloud_total;
  j["covered_multiplicity"] = rep.covered_multiplicity;
  j["segment_count"] = rep.per_segment.size();
  j["total_length_m"] = rep.total_length;
  return j;
}

json config_to_json_obj(const Config& cfg) {
  json j;
  for (const auto& [k, v] : config_pairs(cfg)) j[k] = v;
  return j;
}

void append_aggregate(const AggregateStats& agg, const std::string& prefix,
                      std::string& out) {
  out += prefix + "segment_count = " + std::to_string(agg.count) + "\n";
  out += prefix + "total_length_m = " + fmt_g9(agg.total_length) + "\n";
  out += prefix + "mean_density = " + fmt_g9(agg.mean_density) + "\n";
  out += prefix + "mean_e_rms_cm = " + fmt_g9(100.0 * agg.mean_e_rms) + "\n";
}

json aggregate_to_json_obj(const AggregateStats& agg) {
  json j;
  j["segment_count"] = agg.count;
  j["total_length_m"] = agg.total_length;
  j["mean_density"] = agg.mean_density;
  j["mean_e_rms_cm"] = 100.0 * agg.mean_e_rms;
  return j;
}

}  // namespace

std::string report_to_text(const EvalReport& rep, const Config* echo) {
  std::string out;
  append_eval_pairs(rep, "", out);
  if (echo != nullptr)
    for (const auto& [k, v] : config_pairs(*echo))
      out += "config." + k + " = " + v + "\n";
  return out;
}

std::string report_to_json(const EvalReport& rep, const Config* echo) {
  json j = eval_to_json_obj(rep);
  if (echo != nullptr) j["config"] = config_to_json_obj(*echo);
  return j.dump(2) + "\n";
}

std::string refine_report_to_text(const RefineReport& rep,
                                  const EvalReport* eval_before,
                                  const EvalReport* eval_after,
                                  const Config& cfg) {
  std::string out;
  auto stage = [&](const char* name, const StageCounts& c) {
    out += std::string("stage.") + name + ".in = " + std::to_string(c.in) +
           "\n";
    out += std::string("stage.") + name + ".out = " + std::to_string(c.out) +
           "\n";
  };
  stage("translate", rep.translate);
  stage("crop", rep.crop);
  out += "stage.crop.modified = " + std::to_string(rep.crop_modified) + "\n";
  out += "stage.crop.flagged = " + std::to_string(rep.crop_flagged) + "\n";
  stage("outlier", rep.outlier);
  out += "stage.outlier.theta = " + fmt_g9(rep.outlier_threshold) + "\n";
  out += "stage.outlier.removed = " + std::to_string(rep.outliers_removed) +
         "\n";
  stage("cluster", rep.cluster);
  out += "stage.cluster.count = " + std::to_string(rep.cluster_count) + "\n";
  stage("merge_join", rep.merge_join);
  out += "stage.merge_join.merges = " + std::to_string(rep.merges_applied) +
         "\n";
  out += "stage.merge_join.merge_candidates_adopted = " +
         std::to_string(rep.merge_candidates_adopted) + "\n";
  out += "stage.merge_join.joins = " + std::to_string(rep.joins_applied) + "\n";
  out += "stage.merge_join.sweeps = " + std::to_string(rep.sweeps_run) + "\n";
  append_aggregate(rep.before, "before.", out);
  append_aggregate(rep.after, "after.", out);
  if (eval_before != nullptr) append_eval_pairs(*eval_before, "eval_before.", out);
  if (eval_after != nullptr) append_eval_pairs(*eval_after, "eval_after.", out);
  for (const auto& [k, v] : config_pairs(cfg))
    out += "config." + k + " = " + v + "\n";
  return out;
}

std::string refine_report_to_json(const RefineReport& rep,
                                  const EvalReport* eval_before,
                                  const EvalReport* eval_after,
                                  const Config& cfg) {
  json j;
  auto stage = [](const StageCounts& c) {
    json s;
    s["in"] = c.in;
    s["out"] = c.out;
    return s;
  };
  j["stage"]["translate"] = stage(rep.translate);
  j["stage"]["crop"] = stage(rep.crop);
  j["stage"]["crop"]["modified"] = rep.crop_modified;
  j["stage"]["crop"]["flagged"] = rep.crop_flagged;
  j["stage"]["outlier"] = stage(rep.outlier);
  j["stage"]["outlier"]["theta"] = rep.outlier_threshold;
  j["stage"]["outlier"]["removed"] = rep.outliers_removed;
  j["stage"]["cluster"] = stage(rep.cluster);
  j["stage"]["cluster"]["count"] = rep.cluster_count;
  j["stage"]["merge_join"] = stage(rep.merge_join);
  j["stage"]["merge_join"]["merges"] = rep.merges_applied;
  j["stage"]["merge_join"]["merge_candidates_adopted"] =
      rep.merge_candidates_adopted;
  j["stage"]["merge_join"]["joins"] = rep.joins_applied;
  j["stage"]["merge_join"]["sweeps"] = rep.sweeps_run;
  j["before"] = aggregate_to_json_obj(rep.before);
  j["after"] = aggregate_to_json_obj(rep.after);
  if (eval_before != nullptr) j["eval_before"] = eval_to_json_obj(*eval_before);
  if (eval_after != nullptr) j["eval_after"] = eval_to_json_obj(*eval_after);
  j["config"] = config_to_json_obj(cfg);
  return j.dump(2) + "\n";
}

}  // namespace splatline
