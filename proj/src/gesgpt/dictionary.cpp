#include "gesgpt/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "gesgpt/error.hpp"
#include "gesgpt/util.hpp"

namespace gesgpt {

namespace {

std::string describe(const FrameInterval& iv) {
  return "[" + std::to_string(iv.first) + "," + std::to_string(iv.last) + "]";
}

FrameInterval interval_from_json(const nlohmann::json& j, const char* name) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    fail(ErrorCode::Format, std::string("stage '") + name + "' must be [first, last] frame indices");
  }
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

std::vector<std::string> stage_problems(const StageMap& stages, std::size_t frame_count) {
  std::vector<std::string> problems;
  const int frames = static_cast<int>(frame_count);
  const std::pair<const char*, std::optional<FrameInterval>> ordered[] = {
      {"preparation", stages.preparation},
      {"stroke", stages.stroke},
      {"hold", stages.hold},
      {"retraction", stages.retraction},
  };
  const FrameInterval* previous = nullptr;
  const char* previous_name = nullptr;
  for (const auto& [name, iv] : ordered) {
    if (!iv) continue;
    if (iv->first < 0 || iv->last >= frames || iv->first > iv->last) {
      problems.push_back(std::string(name) + " " + describe(*iv) + " is not a valid range inside the clip's " +
                         std::to_string(frames) + " frames");
    }
    if (previous != nullptr && !(previous->last < iv->first)) {
      problems.push_back(std::string(name) + " " + describe(*iv) + " must start after " + previous_name + " " +
                         describe(*previous));
    }
    previous = &*iv;
    previous_name = name;
  }
  if (!stages.stroke.contains(stages.stroke_apex)) {
    problems.push_back("stroke_apex " + std::to_string(stages.stroke_apex) + " lies outside stroke " +
                       describe(stages.stroke));
  }
  return problems;
}

nlohmann::json stages_to_json(const StageMap& stages) {
  nlohmann::json j = {{"stroke", {stages.stroke.first, stages.stroke.last}}, {"stroke_apex", stages.stroke_apex}};
  if (stages.preparation) j["preparation"] = {stages.preparation->first, stages.preparation->last};
  if (stages.hold) j["hold"] = {stages.hold->first, stages.hold->last};
  if (stages.retraction) j["retraction"] = {stages.retraction->first, stages.retraction->last};
  return j;
}

StageMap stages_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::Format, "stages must be an object");
  StageMap s;
  if (!j.contains("stroke")) fail(ErrorCode::Format, "stages.stroke is required");
  s.stroke = interval_from_json(j["stroke"], "stroke");
  if (!j.contains("stroke_apex") || !j["stroke_apex"].is_number_integer()) {
    fail(ErrorCode::Format, "stages.stroke_apex must be a frame index");
  }
  s.stroke_apex = j["stroke_apex"].get<int>();
  if (j.contains("preparation")) s.preparation = interval_from_json(j["preparation"], "preparation");
  if (j.contains("hold")) s.hold = interval_from_json(j["hold"], "hold");
  if (j.contains("retraction")) s.retraction = interval_from_json(j["retraction"], "retraction");
  for (const auto& [key, _] : j.items()) {
    if (key != "preparation" && key != "stroke" && key != "stroke_apex" && key != "hold" && key != "retraction") {
      fail(ErrorCode::Format, "unknown stage '" + key + "'");
    }
  }
  return s;
}

StageTimes GestureUnit::stage_times() const {
  const double fps = clip.fps();
  StageTimes t;
  t.pre = stages.stroke.first / fps;
  t.stroke = (stages.stroke.last - stages.stroke.first) / fps;
  t.hold = stages.hold ? (stages.hold->last - stages.stroke.last) / fps : 0.0;
  t.post = std::max(0.0, clip.duration_s() - t.pre - t.stroke - t.hold);
  t.apex_in_stroke = (stages.stroke_apex - stages.stroke.first) / fps;
  return t;
}

Dictionary::Dictionary(Pose rest_pose, std::string rest_pose_file, std::vector<GestureUnit> units)
    : rest_pose_(std::move(rest_pose)), rest_pose_file_(std::move(rest_pose_file)), units_(std::move(units)) {
  std::set<std::string> ids;
  for (std::size_t i = 0; i < units_.size(); ++i) {
    if (!ids.insert(units_[i].id).second) fail(ErrorCode::Validation, "duplicate unit id '" + units_[i].id + "'");
    index_[{units_[i].intent, units_[i].duration_variant_s}].push_back(i);
  }
}

const GestureUnit* Dictionary::find(const std::string& id) const {
  const auto it = std::find_if(units_.begin(), units_.end(), [&](const GestureUnit& u) { return u.id == id; });
  return it == units_.end() ? nullptr : &*it;
}

std::vector<const GestureUnit*> Dictionary::bucket(IntentLabel intent, int variant_s) const {
  std::vector<const GestureUnit*> out;
  if (const auto it = index_.find({intent, variant_s}); it != index_.end()) {
    for (std::size_t i : it->second) out.push_back(&units_[i]);
  }
  return out;
}

double mean_joint_distance(std::span<const double> a, std::span<const double> b) {
  const std::size_t joints = a.size() / 3;
  double sum = 0.0;
  for (std::size_t j = 0; j < joints; ++j) {
    const double dx = a[3 * j] - b[3 * j];
    const double dy = a[3 * j + 1] - b[3 * j + 1];
    const double dz = a[3 * j + 2] - b[3 * j + 2];
    sum += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return sum / static_cast<double>(joints);
}

Dictionary load_dictionary(const std::string& manifest_path, const DictionaryLoadOptions& options) {
  namespace fs = std::filesystem;
  const fs::path base = fs::path(manifest_path).parent_path();
  const nlohmann::json manifest = nlohmann::json::parse(read_file(manifest_path), nullptr, false);
  if (manifest.is_discarded() || !manifest.is_object()) fail(ErrorCode::Format, manifest_path + ": manifest is not a JSON object");
  if (manifest.value("version", 0) != 1) fail(ErrorCode::Format, manifest_path + ": manifest version must be 1");
  if (!manifest.contains("rest_pose") || !manifest["rest_pose"].is_string()) {
    fail(ErrorCode::Format, manifest_path + ": manifest needs a \"rest_pose\" clip file");
  }
  const std::string rest_file = manifest["rest_pose"].get<std::string>();
  const Pose rest = load_clip((base / rest_file).string()).pose(0);

  std::vector<std::string> problems;
  std::vector<GestureUnit> units;
  const nlohmann::json& entries = manifest.contains("units") ? manifest["units"] : nlohmann::json::array();
  if (!entries.is_array()) fail(ErrorCode::Format, manifest_path + ": \"units\" must be an array");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    std::string id = "#" + std::to_string(i);
    try {
      id = e.at("id").get<std::string>();
      if (!seen.insert(id).second) {
        problems.push_back("unit " + id + ": duplicate id");
        continue;
      }
      const std::string intent_name = e.at("intent").get<std::string>();
      const auto intent = intent_from_string(intent_name);
      const std::string file = e.at("file").get<std::string>();
      MotionClip clip = load_clip((base / file).string());  // missing file is a load error, not collected
      const int variant = e.at("duration_variant_s").get<int>();
      std::optional<std::string> tag;
      if (e.contains("semantic_tag")) tag = e["semantic_tag"].get<std::string>();
      StageMap stages = stages_from_json(e.at("stages"));

      std::vector<std::string> unit_problems;
      if (!intent) unit_problems.push_back("intent '" + intent_name + "' is not one of the 7 intent labels");
      if (std::find(kDurationVariants.begin(), kDurationVariants.end(), variant) == kDurationVariants.end()) {
        unit_problems.push_back("duration_variant_s " + std::to_string(variant) + " is not one of 3, 6, 9");
      }
      if (tag && intent != IntentLabel::Semantic) unit_problems.push_back("semantic_tag requires the semantic intent");
      for (auto& p : stage_problems(stages, clip.frame_count())) unit_problems.push_back(std::move(p));
      if (clip.joint_names() != rest.joint_names()) {
        unit_problems.push_back("joints differ from the rest pose joints");
      } else {
        const double head = mean_joint_distance(clip.frame(0), rest.positions());
        const double tail = mean_joint_distance(clip.frame(clip.frame_count() - 1), rest.positions());
        if (head > options.eps_rest) {
          unit_problems.push_back("first frame is " + std::to_string(head) + " from the rest pose (limit " +
                                  std::to_string(options.eps_rest) + ")");
        }
        if (tail > options.eps_rest) {
          unit_problems.push_back("last frame is " + std::to_string(tail) + " from the rest pose (limit " +
                                  std::to_string(options.eps_rest) + ")");
        }
      }
      if (!unit_problems.empty()) {
        for (const auto& p : unit_problems) problems.push_back("unit " + id + ": " + p);
        continue;
      }
      units.push_back(GestureUnit{id, *intent, tag, variant, std::move(clip), stages, rest_file, file});
    } catch (const nlohmann::json::exception& ex) {
      problems.push_back("unit " + id + ": malformed entry (" + ex.what() + ")");
    } catch (const Error& ex) {
      if (ex.code() == ErrorCode::Io) throw Error(ErrorCode::Io, "unit " + id + ": " + ex.what());
      problems.push_back("unit " + id + ": " + ex.what());
    }
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return Dictionary(rest, rest_file, std::move(units));
}

nlohmann::json manifest_to_json(const Dictionary& dict) {
  nlohmann::json units = nlohmann::json::array();
  for (const GestureUnit& u : dict.units()) {
    nlohmann::json e = {
        {"id", u.id},
        {"intent", to_string(u.intent)},
        {"duration_variant_s", u.duration_variant_s},
        {"file", u.file},
        {"stages", stages_to_json(u.stages)},
    };
    if (u.semantic_tag) e["semantic_tag"] = *u.semantic_tag;
    units.push_back(std::move(e));
  }
  return {{"version", 1}, {"rest_pose", dict.rest_pose_file()}, {"units", std::move(units)}};
}

std::string serialize_manifest(const Dictionary& dict) { return manifest_to_json(dict).dump(); }

UnitChoice select_unit(const Dictionary& dict, IntentLabel intent, const std::optional<std::string>& semantic_tag,
                       double slot_duration_s, std::uint64_t seed) {
  if (!(slot_duration_s > 0.0)) fail(ErrorCode::InvalidArgument, "slot duration must be positive");
  auto matches = [&](const GestureUnit* u) {
    return intent != IntentLabel::Semantic || !semantic_tag || u->semantic_tag == semantic_tag;
  };
  std::vector<std::pair<int, std::vector<const GestureUnit*>>> buckets;
  for (int variant : kDurationVariants) {
    std::vector<const GestureUnit*> units;
    for (const GestureUnit* u : dict.bucket(intent, variant)) {
      if (matches(u)) units.push_back(u);
    }
    if (!units.empty()) buckets.emplace_back(variant, std::move(units));
  }
  if (buckets.empty()) {
    std::string what = "no gesture unit for intent '" + std::string(to_string(intent)) + "'";
    if (intent == IntentLabel::Semantic && semantic_tag) what += " with tag '" + *semantic_tag + "'";
    fail(ErrorCode::NoGestureAvailable, what);
  }
  // Buckets are ascending; take the largest that fits, else the smallest.
  const auto* chosen = &buckets.front();
  for (const auto& b : buckets) {
    if (b.first <= slot_duration_s) chosen = &b;
  }
  std::mt19937_64 rng(seed);
  const auto& candidates = chosen->second;
  const GestureUnit* unit = candidates[rng() % candidates.size()];
  return {unit, unit->clip.duration_s() > slot_duration_s + 1e-9};
}

}  // namespace gesgpt
