#include "uniclip/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "uniclip/errors.hpp"

namespace uniclip {

using json = nlohmann::ordered_json;

namespace {

template <typename Enum>
struct EnumName {
  Enum value;
  const char* name;
};

constexpr EnumName<LossKind> kLossNames[] = {{LossKind::infonce, "infonce"},
                                             {LossKind::milnce, "milnce"},
                                             {LossKind::supcon, "supcon"},
                                             {LossKind::mpnce, "mpnce"}};
constexpr EnumName<SimilarityMode> kModeNames[] = {{SimilarityMode::shared, "shared"},
                                                   {SimilarityMode::shared_with_offset, "shared_with_offset"},
                                                   {SimilarityMode::domain_dependent, "domain_dependent"}};
constexpr EnumName<Supervision> kSupervisionNames[] = {{Supervision::unified, "unified"},
                                                       {Supervision::separated, "separated"}};
constexpr EnumName<AugmentationAwareness> kAwarenessNames[] = {{AugmentationAwareness::agnostic, "agnostic"},
                                                               {AugmentationAwareness::head, "head"},
                                                               {AugmentationAwareness::encoder, "encoder"}};

template <typename Enum, std::size_t N>
const char* enum_name(const EnumName<Enum> (&table)[N], Enum v) {
  for (const auto& e : table) {
    if (e.value == v) return e.name;
  }
  return "?";
}

template <typename Enum, std::size_t N>
Enum parse_enum(const EnumName<Enum> (&table)[N], const std::string& s, const std::string& key) {
  for (const auto& e : table) {
    if (s == e.name) return e.value;
  }
  std::string allowed;
  for (const auto& e : table) allowed += std::string(allowed.empty() ? "" : ", ") + e.name;
  throw ConfigError("config key '" + key + "': invalid value '" + s + "' (allowed: " + allowed + ")");
}

json policy_to_json(const AugmentationPolicy& p) {
  return json{{"crop_scale", {p.crop_scale_min, p.crop_scale_max}},
              {"crop_ratio", {p.crop_ratio_min, p.crop_ratio_max}},
              {"crop_probability", p.crop_probability},
              {"jitter_probability", p.jitter_probability},
              {"brightness", p.brightness},
              {"contrast", p.contrast},
              {"saturation", p.saturation},
              {"hue", p.hue},
              {"blur_probability", p.blur_probability},
              {"blur_sigma", {p.blur_sigma_min, p.blur_sigma_max}},
              {"flip_probability", p.flip_probability},
              {"gray_probability", p.gray_probability}};
}

json to_json_tree(const RunConfig& c) {
  const auto& w = c.world;
  const auto& e = c.encoder;
  const auto& t = c.train;
  const auto& o = t.optimizer;
  return json{
      {"schema_version", c.schema_version},
      {"seed", c.seed},
      {"world",
       {{"n_pairs", w.n_pairs},
        {"eval_fraction", w.eval_fraction},
        {"n_classes", w.n_classes},
        {"n_hues", w.n_hues},
        {"latent_dim", w.latent_dim},
        {"resolution", w.resolution},
        {"noise", w.noise},
        {"instance_spread", w.instance_spread},
        {"spatial_probability", w.spatial_probability},
        {"color_probability", w.color_probability}}},
      {"encoder",
       {{"image_hidden", e.image_hidden},
        {"representation_width", e.representation_width},
        {"augmentation_width", e.augmentation_width},
        {"unified_width", e.unified_width},
        {"head_blocks", e.head_blocks},
        {"head_expansion", e.head_expansion},
        {"text_hidden", e.text_hidden},
        {"text_representation_width", e.text_representation_width},
        {"awareness", enum_name(kAwarenessNames, e.awareness)}}},
      {"loss",
       {{"kind", enum_name(kLossNames, c.loss.kind)},
        {"supervision", enum_name(kSupervisionNames, c.supervision)},
        {"mpnce", {{"trivial", c.loss.mpnce.include_trivial}, {"weights", c.loss.mpnce.apply_weights}}}}},
      {"similarity", {{"mode", enum_name(kModeNames, c.similarity)}, {"initial_tau", c.initial_tau}}},
      {"views", {{"image_policies", c.image_view_policies}, {"text_views", c.text_views}}},
      {"augmentation", {{"weak", policy_to_json(c.weak_policy)}, {"strong", policy_to_json(c.strong_policy)}}},
      {"train",
       {{"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"lr", o.lr},
        {"beta1", o.beta1},
        {"beta2", o.beta2},
        {"eps", o.eps},
        {"weight_decay", o.weight_decay},
        {"warmup_epochs", o.warmup_epochs},
        {"probe_train_pairs", t.probe_train_pairs},
        {"probe_steps", t.probe_steps},
        {"probe_lr", t.probe_lr},
        {"density_batch", t.density_batch}}}};
}

std::string type_name(const json& j) {
  if (j.is_boolean()) return "bool";
  if (j.is_number_unsigned()) return "unsigned integer";
  if (j.is_number_integer()) return "integer";
  if (j.is_number_float()) return "real";
  if (j.is_string()) return "string";
  if (j.is_array()) return "array";
  if (j.is_object()) return "object";
  return "null";
}

bool compatible(const json& expected, const json& given) {
  if (expected.is_boolean()) return given.is_boolean();
  if (expected.is_number_unsigned()) return given.is_number_unsigned() || (given.is_number_integer() && given.get<long long>() >= 0);
  if (expected.is_number_integer()) return given.is_number_integer();
  if (expected.is_number_float()) return given.is_number();
  if (expected.is_string()) return given.is_string();
  if (expected.is_array()) {
    if (!given.is_array()) return false;
    if (expected.empty()) return true;
    for (const auto& g : given) {
      if (!compatible(expected.front(), g)) return false;
    }
    return true;
  }
  return false;
}

/// Recursively merges `given` into `base`, rejecting unknown keys and type mismatches.
void merge_checked(json& base, const json& given, const std::string& path) {
  if (!given.is_object()) throw ConfigError("config key '" + path + "': expected an object");
  for (auto it = given.begin(); it != given.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_checked(slot, it.value(), key);
    } else if (!compatible(slot, it.value())) {
      throw ConfigError("config key '" + key + "': expected " + type_name(slot) + ", got " + type_name(it.value()));
    } else {
      slot = it.value();
    }
  }
}

void apply_override(json& tree, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;  // bare strings such as loss.kind=mpnce
  }
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
  const json* target = &tree;
  for (const auto& part : parts) {
    target = target->is_object() && target->contains(part) ? &(*target)[part] : nullptr;
    if (target == nullptr) break;
  }
  if (target != nullptr && target->is_string() && !value.is_string()) value = raw;
  json patch = value;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    json wrapped = json::object();
    wrapped[*it] = std::move(patch);
    patch = std::move(wrapped);
  }
  merge_checked(tree, patch, "");
}

AugmentationPolicy policy_from_json(const json& j, AugmentationStrength strength) {
  AugmentationPolicy p;
  p.strength = strength;
  p.crop_scale_min = j.at("crop_scale").at(0).get<double>();
  p.crop_scale_max = j.at("crop_scale").at(1).get<double>();
  p.crop_ratio_min = j.at("crop_ratio").at(0).get<double>();
  p.crop_ratio_max = j.at("crop_ratio").at(1).get<double>();
  p.crop_probability = j.at("crop_probability").get<double>();
  p.jitter_probability = j.at("jitter_probability").get<double>();
  p.brightness = j.at("brightness").get<double>();
  p.contrast = j.at("contrast").get<double>();
  p.saturation = j.at("saturation").get<double>();
  p.hue = j.at("hue").get<double>();
  p.blur_probability = j.at("blur_probability").get<double>();
  p.blur_sigma_min = j.at("blur_sigma").at(0).get<double>();
  p.blur_sigma_max = j.at("blur_sigma").at(1).get<double>();
  p.flip_probability = j.at("flip_probability").get<double>();
  p.gray_probability = j.at("gray_probability").get<double>();
  return p;
}

RunConfig from_json_tree(const json& j) {
  RunConfig c;
  try {
    c.schema_version = j.at("schema_version").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto& w = j.at("world");
    c.world.n_pairs = w.at("n_pairs").get<std::size_t>();
    c.world.eval_fraction = w.at("eval_fraction").get<double>();
    c.world.n_classes = w.at("n_classes").get<std::size_t>();
    c.world.n_hues = w.at("n_hues").get<std::size_t>();
    c.world.latent_dim = w.at("latent_dim").get<std::size_t>();
    c.world.resolution = w.at("resolution").get<std::size_t>();
    c.world.noise = w.at("noise").get<double>();
    c.world.instance_spread = w.at("instance_spread").get<double>();
    c.world.spatial_probability = w.at("spatial_probability").get<double>();
    c.world.color_probability = w.at("color_probability").get<double>();
    const auto& e = j.at("encoder");
    c.encoder.image_hidden = e.at("image_hidden").get<std::size_t>();
    c.encoder.representation_width = e.at("representation_width").get<std::size_t>();
    c.encoder.augmentation_width = e.at("augmentation_width").get<std::size_t>();
    c.encoder.unified_width = e.at("unified_width").get<std::size_t>();
    c.encoder.head_blocks = e.at("head_blocks").get<std::size_t>();
    c.encoder.head_expansion = e.at("head_expansion").get<std::size_t>();
    c.encoder.text_hidden = e.at("text_hidden").get<std::size_t>();
    c.encoder.text_representation_width = e.at("text_representation_width").get<std::size_t>();
    c.encoder.awareness = parse_enum(kAwarenessNames, e.at("awareness").get<std::string>(), "encoder.awareness");
    const auto& l = j.at("loss");
    c.loss.kind = parse_enum(kLossNames, l.at("kind").get<std::string>(), "loss.kind");
    c.supervision = parse_enum(kSupervisionNames, l.at("supervision").get<std::string>(), "loss.supervision");
    c.loss.mpnce.include_trivial = l.at("mpnce").at("trivial").get<bool>();
    c.loss.mpnce.apply_weights = l.at("mpnce").at("weights").get<bool>();
    const auto& s = j.at("similarity");
    c.similarity = parse_enum(kModeNames, s.at("mode").get<std::string>(), "similarity.mode");
    c.initial_tau = s.at("initial_tau").get<double>();
    const auto& v = j.at("views");
    c.image_view_policies = v.at("image_policies").get<std::vector<std::string>>();
    c.text_views = v.at("text_views").get<std::size_t>();
    c.weak_policy = policy_from_json(j.at("augmentation").at("weak"), AugmentationStrength::weak);
    c.strong_policy = policy_from_json(j.at("augmentation").at("strong"), AugmentationStrength::strong);
    const auto& t = j.at("train");
    c.train.epochs = t.at("epochs").get<std::size_t>();
    c.train.batch_size = t.at("batch_size").get<std::size_t>();
    c.train.optimizer.lr = t.at("lr").get<double>();
    c.train.optimizer.beta1 = t.at("beta1").get<double>();
    c.train.optimizer.beta2 = t.at("beta2").get<double>();
    c.train.optimizer.eps = t.at("eps").get<double>();
    c.train.optimizer.weight_decay = t.at("weight_decay").get<double>();
    c.train.optimizer.warmup_epochs = t.at("warmup_epochs").get<double>();
    c.train.probe_train_pairs = t.at("probe_train_pairs").get<std::size_t>();
    c.train.probe_steps = t.at("probe_steps").get<std::size_t>();
    c.train.probe_lr = t.at("probe_lr").get<double>();
    c.train.density_batch = t.at("density_batch").get<std::size_t>();
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("config: ") + ex.what());
  }
  c.validate();
  return c;
}

void describe(const json& node, const std::string& path, std::ostringstream& out) {
  for (auto it = node.begin(); it != node.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (it.value().is_object()) {
      describe(it.value(), key, out);
    } else {
      out << "  " << key << " (" << type_name(it.value()) << ") = " << it.value().dump() << "\n";
    }
  }
}

}  // namespace

std::string to_string(Supervision s) { return enum_name(kSupervisionNames, s); }

std::vector<AugmentationPolicy> RunConfig::view_policies() const {
  std::vector<AugmentationPolicy> out;
  for (const auto& name : image_view_policies) {
    if (name == "weak") {
      out.push_back(weak_policy);
    } else if (name == "strong") {
      out.push_back(strong_policy);
    } else if (name == "none") {
      out.push_back(AugmentationPolicy::none());
    } else {
      throw ConfigError("config key 'views.image_policies': unknown policy '" + name + "' (allowed: weak, strong, none)");
    }
  }
  return out;
}

void RunConfig::validate() {
  if (schema_version != kConfigSchemaVersion) {
    throw ConfigError("config key 'schema_version': unsupported version " + std::to_string(schema_version));
  }
  world.validate();
  encoder.pixel_count = SyntheticImage::kChannels * world.resolution * world.resolution;
  encoder.text_dim = world.text_dim();
  encoder.validate();
  if (image_view_policies.empty()) throw ConfigError("config key 'views.image_policies': needs at least one view");
  if (text_views == 0) throw ConfigError("config key 'views.text_views': must be >= 1");
  (void)view_policies();
  if (image_view_policies.front() == "strong") {
    throw ConfigError("config key 'views.image_policies': the first image view must be weak (or none)");
  }
  weak_policy.validate();
  strong_policy.validate();
  if (!(initial_tau > 0.0)) throw ConfigError("config key 'similarity.initial_tau': must be > 0");
  if (train.batch_size < 2) throw ConfigError("config key 'train.batch_size': must be >= 2");
  if (train.epochs == 0) throw ConfigError("config key 'train.epochs': must be >= 1");
  if (!(train.optimizer.lr >= 0.0)) throw ConfigError("config key 'train.lr': must be >= 0");
  if (!(train.optimizer.beta1 >= 0.0 && train.optimizer.beta1 < 1.0) ||
      !(train.optimizer.beta2 >= 0.0 && train.optimizer.beta2 < 1.0)) {
    throw ConfigError("config keys 'train.beta1/beta2': must be in [0, 1)");
  }
  if (!(train.optimizer.eps > 0.0)) throw ConfigError("config key 'train.eps': must be > 0");
  if (!(train.optimizer.weight_decay >= 0.0)) throw ConfigError("config key 'train.weight_decay': must be >= 0");
  if (!(train.optimizer.warmup_epochs >= 0.0)) throw ConfigError("config key 'train.warmup_epochs': must be >= 0");
  if (train.density_batch < 2) throw ConfigError("config key 'train.density_batch': must be >= 2");
  if (loss.kind == LossKind::infonce && (image_views() + text_views) != 2) {
    throw ConfigError("config key 'loss.kind': infonce needs exactly one positive (one image view, one text view)");
  }
  const auto n_eval = static_cast<std::size_t>(static_cast<double>(world.n_pairs) * world.eval_fraction);
  const std::size_t n_train = world.n_pairs - n_eval;
  if (n_train < train.batch_size) throw ConfigError("config: fewer training pairs than one batch");
  if (n_eval < 5) throw ConfigError("config: at least 5 evaluation pairs are needed for R@5");
}

RunConfig default_config() {
  RunConfig c;
  c.validate();
  return c;
}

std::string config_to_json(const RunConfig& cfg, int indent) { return to_json_tree(cfg).dump(indent); }

RunConfig with_overrides(const RunConfig& base, const std::vector<std::string>& overrides) {
  json tree = to_json_tree(base);
  for (const auto& o : overrides) apply_override(tree, o);
  return from_json_tree(tree);
}

RunConfig config_from_json(const std::string& json_text, const std::vector<std::string>& overrides) {
  json tree = to_json_tree(RunConfig{});
  json given;
  try {
    given = json::parse(json_text);
  } catch (const json::parse_error& ex) {
    throw ConfigError(std::string("config: malformed JSON: ") + ex.what());
  }
  merge_checked(tree, given, "");
  for (const auto& o : overrides) apply_override(tree, o);
  return from_json_tree(tree);
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found or unreadable: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str(), overrides);
}

std::string config_schema_description() {
  std::ostringstream out;
  out << "Configuration keys (schema version " << kConfigSchemaVersion << "):\n";
  describe(to_json_tree(RunConfig{}), "", out);
  out << "Enumerations:\n"
         "  loss.kind: infonce | milnce | supcon | mpnce\n"
         "  loss.supervision: unified | separated\n"
         "  similarity.mode: shared | shared_with_offset | domain_dependent\n"
         "  encoder.awareness: agnostic | head | encoder\n"
         "  views.image_policies[]: weak | strong | none\n";
  return out.str();
}

}  // namespace uniclip
