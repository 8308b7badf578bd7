#pragma once

// File formats: 8-bit PNG images, 16-bit PNG depth maps (value / 256
// meters, 0 = invalid), 8-bit PNG layout masks and probability grids,
// KITTI pose lists (12 row-major values of the 3x4 camera-to-world matrix
// per line), flat binary feature maps (little-endian int32 H, W, D header
// followed by row-major float64 data), calibration and scene JSON, and
// deterministic CSV/JSON metric reports with 6 significant digits.

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <png.h>
#include <nlohmann/json.hpp>

#include "crossview/bev.hpp"
#include "crossview/camera.hpp"
#include "crossview/cct.hpp"
#include "crossview/image.hpp"
#include "crossview/metrics.hpp"
#include "crossview/se3.hpp"
#include "crossview/synth.hpp"
#include "crossview/types.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary feature files assume a little-endian host");

namespace crossview {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FileHandle = std::unique_ptr<std::FILE, FileCloser>;

struct PngData {
  int width = 0;
  int height = 0;
  int channels = 0;   // 1 (gray) or 3 (rgb)
  int bit_depth = 0;  // 8 or 16
  std::vector<std::uint16_t> samples;  // row-major, channel-interleaved
};

inline PngData read_png(const std::string& path) {
  FileHandle file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode PNG " + path);
  }

  png_init_io(png, file.get());
  png_read_info(png, info);

  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  if (png_get_bit_depth(png, info) == 16) png_set_swap(png);
  png_read_update_info(png, info);

  PngData out;
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  if (out.channels != 1 && out.channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path + ": expected a grayscale or RGB PNG");
  }

  const std::size_t row_bytes = png_get_rowbytes(png, info);
  std::vector<std::uint8_t> raw(row_bytes * out.height);
  std::vector<png_bytep> rows(out.height);
  for (int r = 0; r < out.height; ++r) rows[r] = raw.data() + r * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t n =
      static_cast<std::size_t>(out.width) * out.height * out.channels;
  out.samples.resize(n);
  if (out.bit_depth == 16) {
    std::memcpy(out.samples.data(), raw.data(), n * 2);
  } else {
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = raw[i];
  }
  return out;
}

inline void write_png(const std::string& path, const PngData& data) {
  FileHandle file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot create " + path);

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode PNG " + path);
  }

  png_init_io(png, file.get());
  const int color_type =
      data.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, data.width, data.height, data.bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (data.bit_depth == 16) png_set_swap(png);

  const std::size_t n =
      static_cast<std::size_t>(data.width) * data.height * data.channels;
  std::vector<std::uint8_t> raw;
  std::size_t row_bytes;
  if (data.bit_depth == 16) {
    row_bytes = static_cast<std::size_t>(data.width) * data.channels * 2;
    raw.resize(n * 2);
    std::memcpy(raw.data(), data.samples.data(), n * 2);
  } else {
    row_bytes = static_cast<std::size_t>(data.width) * data.channels;
    raw.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      raw[i] = static_cast<std::uint8_t>(data.samples[i]);
  }
  std::vector<png_bytep> rows(data.height);
  for (int r = 0; r < data.height; ++r) rows[r] = raw.data() + r * row_bytes;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Images, depth maps, masks

inline ImagePlane load_image(const std::string& path) {
  const detail::PngData png = detail::read_png(path);
  if (png.bit_depth != 8)
    throw IoError(path + ": expected an 8-bit image PNG");
  Grid3<double> px(png.height, png.width, png.channels);
  for (std::size_t i = 0; i < png.samples.size(); ++i)
    px.data()[i] = png.samples[i] / 255.0;
  return ImagePlane(std::move(px));
}

inline void save_image(const std::string& path, const ImagePlane& img) {
  if (img.channels() != 1 && img.channels() != 3)
    throw Error("save_image: only 1- or 3-channel images are supported");
  detail::PngData png;
  png.width = img.width();
  png.height = img.height();
  png.channels = img.channels();
  png.bit_depth = 8;
  png.samples.resize(static_cast<std::size_t>(png.width) * png.height *
                     png.channels);
  for (std::size_t i = 0; i < png.samples.size(); ++i)
    png.samples[i] = static_cast<std::uint16_t>(
        std::lround(img.pixels().data()[i] * 255.0));
  detail::write_png(path, png);
}

struct DepthImage {
  Grid<double> depth;  // meters; meaningful only where valid
  Mask valid;
};

// 16-bit grayscale PNG, depth = value / 256 meters, 0 marks invalid.
inline DepthImage load_depth(const std::string& path) {
  const detail::PngData png = detail::read_png(path);
  if (png.bit_depth != 16 || png.channels != 1)
    throw IoError(path + ": expected a 16-bit grayscale depth PNG");
  DepthImage out{Grid<double>(png.height, png.width, 0.0),
                 Mask(png.height, png.width, 0)};
  for (int r = 0; r < png.height; ++r)
    for (int c = 0; c < png.width; ++c) {
      const std::uint16_t v = png.samples[static_cast<std::size_t>(r) * png.width + c];
      if (v == 0) continue;
      out.depth(r, c) = v / 256.0;
      out.valid(r, c) = 1;
    }
  return out;
}

inline void save_depth(const std::string& path, const Grid<double>& depth,
                       const Mask* valid = nullptr) {
  if (valid && !depth.same_shape(*valid))
    throw ShapeMismatch("save_depth: mask shape differs");
  detail::PngData png;
  png.width = depth.cols();
  png.height = depth.rows();
  png.channels = 1;
  png.bit_depth = 16;
  png.samples.resize(depth.data().size());
  for (int r = 0; r < depth.rows(); ++r)
    for (int c = 0; c < depth.cols(); ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * depth.cols() + c;
      if (valid && !(*valid)(r, c)) {
        png.samples[i] = 0;
        continue;
      }
      const double v = depth(r, c) * 256.0;
      long q = std::lround(v);
      q = std::clamp(q, 0L, 65535L);
      png.samples[i] = static_cast<std::uint16_t>(q);
    }
  detail::write_png(path, png);
}

// 8-bit grayscale probability grid, value / 255.
inline Grid<double> load_probability(const std::string& path) {
  const detail::PngData png = detail::read_png(path);
  if (png.bit_depth != 8 || png.channels != 1)
    throw IoError(path + ": expected an 8-bit grayscale PNG");
  Grid<double> out(png.height, png.width);
  for (std::size_t i = 0; i < png.samples.size(); ++i)
    out.data()[i] = png.samples[i] / 255.0;
  return out;
}

inline void save_probability(const std::string& path, const Grid<double>& p) {
  detail::PngData png;
  png.width = p.cols();
  png.height = p.rows();
  png.channels = 1;
  png.bit_depth = 8;
  png.samples.resize(p.data().size());
  for (std::size_t i = 0; i < p.data().size(); ++i) {
    const double v = p.data()[i];
    if (!(v >= 0.0 && v <= 1.0))
      throw Error("save_probability: values must lie in [0, 1]");
    png.samples[i] = static_cast<std::uint16_t>(std::lround(v * 255.0));
  }
  detail::write_png(path, png);
}

// Binary mask: pixels at or above half intensity count as foreground.
inline Mask load_binary_mask(const std::string& path) {
  const detail::PngData png = detail::read_png(path);
  if (png.channels != 1)
    throw IoError(path + ": expected a grayscale mask PNG");
  const std::uint16_t half = png.bit_depth == 16 ? 32768 : 128;
  Mask out(png.height, png.width, 0);
  for (std::size_t i = 0; i < png.samples.size(); ++i)
    out.data()[i] = png.samples[i] >= half ? 1 : 0;
  return out;
}

inline void save_binary_mask(const std::string& path, const Mask& m) {
  detail::PngData png;
  png.width = m.cols();
  png.height = m.rows();
  png.channels = 1;
  png.bit_depth = 8;
  png.samples.resize(m.data().size());
  for (std::size_t i = 0; i < m.data().size(); ++i)
    png.samples[i] = m.data()[i] ? 255 : 0;
  detail::write_png(path, png);
}

// ---------------------------------------------------------------------------
// Trajectories

inline std::vector<Se3Pose> load_poses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<Se3Pose> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::array<double, 12> m{};
    for (double& v : m)
      if (!(ss >> v))
        throw IoError(path + ": line " + std::to_string(line_no) +
                      " needs 12 values");
    poses.push_back(Se3Pose::from_matrix_row_major(m));
  }
  return poses;
}

inline Trajectory load_trajectory(const std::string& path) {
  Trajectory t{load_poses(path)};
  t.validate();
  return t;
}

inline void save_poses(const std::string& path,
                       const std::vector<Se3Pose>& poses) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path);
  char buf[32];
  for (const Se3Pose& p : poses) {
    const std::array<double, 12> m = p.to_matrix_row_major();
    for (std::size_t i = 0; i < m.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", m[i]);
      out << buf << (i + 1 < m.size() ? " " : "\n");
    }
  }
  if (!out) throw IoError("failed writing " + path);
}

// ---------------------------------------------------------------------------
// Feature maps and attention weights

inline void save_feature_map(const std::string& path, const FeatureMap& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path);
  const std::int32_t header[3] = {f.height(), f.width(), f.channels()};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(f.values.data().data()),
            static_cast<std::streamsize>(f.values.data().size() * 8));
  if (!out) throw IoError("failed writing " + path);
}

inline FeatureMap load_feature_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::int32_t header[3];
  if (!in.read(reinterpret_cast<char*>(header), sizeof header))
    throw IoError(path + ": truncated header");
  if (header[0] < 1 || header[1] < 1 || header[2] < 1)
    throw IoError(path + ": non-positive dimensions");
  Grid3<double> values(header[0], header[1], header[2]);
  if (!in.read(reinterpret_cast<char*>(values.data().data()),
               static_cast<std::streamsize>(values.data().size() * 8)))
    throw IoError(path + ": truncated data");
  return FeatureMap(std::move(values));
}

// Fuse weights travel in the same container: a (2D+1) x D x 1 map whose
// last row is the bias.
inline void save_cct_weights(const std::string& path, const CctWeights& w) {
  const int d = w.fuse_kernel.cols();
  w.validate(d);
  Grid3<double> packed(2 * d + 1, d, 1);
  for (int r = 0; r < 2 * d; ++r)
    for (int c = 0; c < d; ++c) packed(r, c, 0) = w.fuse_kernel(r, c);
  for (int c = 0; c < d; ++c) packed(2 * d, c, 0) = w.fuse_bias[c];
  save_feature_map(path, FeatureMap(std::move(packed)));
}

inline CctWeights load_cct_weights(const std::string& path) {
  const FeatureMap packed = load_feature_map(path);
  const int d = packed.width();
  if (packed.channels() != 1 || packed.height() != 2 * d + 1)
    throw IoError(path + ": weights must be a (2D+1) x D x 1 map");
  CctWeights w;
  w.fuse_kernel = Grid<double>(2 * d, d);
  w.fuse_bias.resize(d);
  for (int r = 0; r < 2 * d; ++r)
    for (int c = 0; c < d; ++c) w.fuse_kernel(r, c) = packed(r, c, 0);
  for (int c = 0; c < d; ++c) w.fuse_bias[c] = packed(2 * d, c, 0);
  w.validate(d);
  return w;
}

// ---------------------------------------------------------------------------
// Calibration and scene JSON

namespace detail {

inline nlohmann::json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

inline CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
  CameraIntrinsics k;
  const auto& kv = j.at("k");
  if (!kv.is_array() || kv.size() != 9)
    throw Error("intrinsics.k must hold 9 row-major values");
  k.fx = kv[0].get<double>();
  k.cx = kv[2].get<double>();
  k.fy = kv[4].get<double>();
  k.cy = kv[5].get<double>();
  k.width = j.at("width").get<int>();
  k.height = j.at("height").get<int>();
  k.validate();
  return k;
}

inline nlohmann::ordered_json intrinsics_to_json(const CameraIntrinsics& k) {
  return {{"k", {k.fx, 0.0, k.cx, 0.0, k.fy, k.cy, 0.0, 0.0, 1.0}},
          {"width", k.width},
          {"height", k.height}};
}

inline Se3Pose pose_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 12)
    throw Error("SE(3) entries must hold 12 row-major values");
  std::array<double, 12> m{};
  for (std::size_t i = 0; i < 12; ++i) m[i] = j[i].get<double>();
  return Se3Pose::from_matrix_row_major(m);
}

inline nlohmann::ordered_json pose_to_json(const Se3Pose& p) {
  const std::array<double, 12> m = p.to_matrix_row_major();
  return nlohmann::ordered_json(m);
}

inline BevSpec bev_from_json(const nlohmann::json& j) {
  BevSpec bev;
  bev.cells = j.value("cells", bev.cells);
  bev.extent_z = j.value("extent_z", bev.extent_z);
  bev.camera_height = j.value("camera_height", bev.camera_height);
  bev.validate();
  return bev;
}

}  // namespace detail

struct Calibration {
  CameraIntrinsics intrinsics;
  std::optional<Se3Pose> t_ego_cam;
  std::optional<Se3Pose> t_bev_ego;
  std::optional<BevSpec> bev;
};

inline Calibration load_calibration(const std::string& path) {
  const nlohmann::json j = detail::parse_json_file(path);
  Calibration calib;
  calib.intrinsics = detail::intrinsics_from_json(j.at("intrinsics"));
  if (j.contains("t_ego_cam"))
    calib.t_ego_cam = detail::pose_from_json(j.at("t_ego_cam"));
  if (j.contains("t_bev_ego"))
    calib.t_bev_ego = detail::pose_from_json(j.at("t_bev_ego"));
  if (j.contains("bev")) calib.bev = detail::bev_from_json(j.at("bev"));
  return calib;
}

inline SyntheticScene load_scene(const std::string& path) {
  const nlohmann::json j = detail::parse_json_file(path);
  SyntheticScene scene;
  scene.seed = j.value("seed", scene.seed);
  scene.camera_height = j.value("camera_height", scene.camera_height);
  scene.pitch = j.value("pitch", scene.pitch);
  scene.intrinsics = detail::intrinsics_from_json(j.at("intrinsics"));
  if (j.contains("bev")) scene.bev = detail::bev_from_json(j.at("bev"));
  scene.poses.clear();
  for (const auto& p : j.at("poses"))
    scene.poses.push_back(detail::pose_from_json(p));
  scene.road_mask = Mask(scene.bev.cells, scene.bev.cells, 1);
  if (j.contains("road_rows")) {
    const auto& rows = j.at("road_rows");
    if (static_cast<int>(rows.size()) != scene.bev.cells)
      throw Error("scene road_rows must have one string per BEV row");
    for (int r = 0; r < scene.bev.cells; ++r) {
      const std::string row = rows[r].get<std::string>();
      if (static_cast<int>(row.size()) != scene.bev.cells)
        throw Error("scene road_rows strings must match the BEV width");
      for (int c = 0; c < scene.bev.cells; ++c)
        scene.road_mask(r, c) = row[c] == '0' ? 0 : 1;
    }
  }
  scene.validate();
  return scene;
}

inline void save_scene(const std::string& path, const SyntheticScene& scene) {
  scene.validate();
  nlohmann::ordered_json j;
  j["seed"] = scene.seed;
  j["camera_height"] = scene.camera_height;
  j["pitch"] = scene.pitch;
  j["intrinsics"] = detail::intrinsics_to_json(scene.intrinsics);
  j["bev"] = {{"cells", scene.bev.cells},
              {"extent_z", scene.bev.extent_z},
              {"camera_height", scene.bev.camera_height}};
  j["poses"] = nlohmann::ordered_json::array();
  for (const Se3Pose& p : scene.poses)
    j["poses"].push_back(detail::pose_to_json(p));
  j["road_rows"] = nlohmann::ordered_json::array();
  for (int r = 0; r < scene.road_mask.rows(); ++r) {
    std::string row(scene.road_mask.cols(), '0');
    for (int c = 0; c < scene.road_mask.cols(); ++c)
      if (scene.road_mask(r, c)) row[c] = '1';
    j["road_rows"].push_back(row);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path);
}

// ---------------------------------------------------------------------------
// Reports

// Formats with 6 significant digits, the fixed precision of all emitted
// reports.
inline std::string format_number(double v) {
  if (!std::isfinite(v)) throw NonFiniteValue("report values must be finite");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Ordered metric -> value report, emitted as CSV or JSON with identical
// numeric formatting.
class Report {
 public:
  void add(const std::string& name, double value) {
    entries_.emplace_back(name, value);
  }

  std::string csv() const {
    std::string out = "metric,value\n";
    for (const auto& [name, value] : entries_)
      out += name + "," + format_number(value) + "\n";
    return out;
  }

  std::string json() const {
    std::string out = "{\n";
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      out += "  \"" + entries_[i].first + "\": " +
             format_number(entries_[i].second);
      out += i + 1 < entries_.size() ? ",\n" : "\n";
    }
    out += "}\n";
    return out;
  }

  void write_csv(const std::string& path) const { write(path, csv()); }
  void write_json(const std::string& path) const { write(path, json()); }

  const std::vector<std::pair<std::string, double>>& entries() const {
    return entries_;
  }

 private:
  static void write(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path);
    out << text;
    if (!out) throw IoError("failed writing " + path);
  }

  std::vector<std::pair<std::string, double>> entries_;
};

}  // namespace crossview
