#pragma once

// JSON round-tripping of the tunable configuration blocks. Serialization
// is canonical (fixed key order, two-space indent, trailing newline) so a
// default-config dump can be compared byte for byte.

#include <string>

#include <nlohmann/json.hpp>

#include "crossview/bev.hpp"
#include "crossview/depth_loss.hpp"
#include "crossview/layout_loss.hpp"
#include "crossview/metrics.hpp"
#include "crossview/types.hpp"

namespace crossview {

inline std::string to_string(UnionMode mode) {
  return mode == UnionMode::standard ? "standard" : "paper-literal";
}

inline UnionMode union_mode_from_string(const std::string& s) {
  if (s == "standard") return UnionMode::standard;
  if (s == "paper-literal") return UnionMode::paper_literal;
  throw Error("union_mode must be \"standard\" or \"paper-literal\"");
}

struct ToolkitConfig {
  DepthPoseLossConfig depth_pose;
  LayoutLossConfig layout;
  BevSpec bev;

  void validate() const {
    depth_pose.validate();
    layout.validate();
    bev.validate();
  }
};

inline nlohmann::ordered_json to_json(const ToolkitConfig& cfg) {
  nlohmann::ordered_json j;
  j["depth_pose"] = {{"alpha", cfg.depth_pose.alpha},
                     {"beta", cfg.depth_pose.beta},
                     {"ssim_c1", cfg.depth_pose.ssim_c1},
                     {"ssim_c2", cfg.depth_pose.ssim_c2},
                     {"smooth_weight", cfg.depth_pose.smooth_weight}};
  j["layout"] = {{"w_road", cfg.layout.w_road},
                 {"w_vehicle", cfg.layout.w_vehicle},
                 {"lambda", cfg.layout.lambda},
                 {"union_mode", to_string(cfg.layout.union_mode)},
                 {"positive_only_weight", cfg.layout.positive_only_weight}};
  j["bev"] = {{"cells", cfg.bev.cells},
              {"extent_z", cfg.bev.extent_z},
              {"camera_height", cfg.bev.camera_height}};
  return j;
}

inline std::string serialize_config(const ToolkitConfig& cfg) {
  return to_json(cfg).dump(2) + "\n";
}

// Fills a config from JSON; absent keys keep their defaults.
inline ToolkitConfig config_from_json(const nlohmann::json& j) {
  ToolkitConfig cfg;
  if (j.contains("depth_pose")) {
    const auto& d = j.at("depth_pose");
    cfg.depth_pose.alpha = d.value("alpha", cfg.depth_pose.alpha);
    cfg.depth_pose.beta = d.value("beta", cfg.depth_pose.beta);
    cfg.depth_pose.ssim_c1 = d.value("ssim_c1", cfg.depth_pose.ssim_c1);
    cfg.depth_pose.ssim_c2 = d.value("ssim_c2", cfg.depth_pose.ssim_c2);
    cfg.depth_pose.smooth_weight =
        d.value("smooth_weight", cfg.depth_pose.smooth_weight);
  }
  if (j.contains("layout")) {
    const auto& l = j.at("layout");
    cfg.layout.w_road = l.value("w_road", cfg.layout.w_road);
    cfg.layout.w_vehicle = l.value("w_vehicle", cfg.layout.w_vehicle);
    cfg.layout.lambda = l.value("lambda", cfg.layout.lambda);
    if (l.contains("union_mode"))
      cfg.layout.union_mode =
          union_mode_from_string(l.at("union_mode").get<std::string>());
    cfg.layout.positive_only_weight =
        l.value("positive_only_weight", cfg.layout.positive_only_weight);
  }
  if (j.contains("bev")) {
    const auto& b = j.at("bev");
    cfg.bev.cells = b.value("cells", cfg.bev.cells);
    cfg.bev.extent_z = b.value("extent_z", cfg.bev.extent_z);
    cfg.bev.camera_height = b.value("camera_height", cfg.bev.camera_height);
  }
  cfg.validate();
  return cfg;
}

}  // namespace crossview
