#include "uniclip/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "uniclip/errors.hpp"

namespace uniclip {

namespace {

GridCell cell(std::string id, std::vector<std::string> overrides) { return {std::move(id), std::move(overrides)}; }

std::string views_override(std::size_t weak, std::size_t strong) {
  std::string s = "views.image_policies=[";
  for (std::size_t a = 0; a < weak + strong; ++a) {
    s += std::string(a ? "," : "") + (a < weak ? "\"weak\"" : "\"strong\"");
  }
  return s + "]";
}

std::set<std::string> override_keys(const GridCell& c) {
  std::set<std::string> keys;
  for (const auto& o : c.overrides) keys.insert(o.substr(0, o.find('=')));
  return keys;
}

}  // namespace

std::vector<std::string> grid_axes() { return {"loss", "similarity", "awareness", "views", "head", "augmentation"}; }

GridSpec standard_grid(const std::string& axis, std::size_t n_seeds) {
  GridSpec g;
  g.axis = axis;
  for (std::size_t s = 0; s < n_seeds; ++s) g.seeds.push_back(s);
  if (axis == "loss") {
    g.cells = {
        cell("milnce", {"loss.kind=milnce", "loss.mpnce.trivial=true", "loss.mpnce.weights=true"}),
        cell("supcon", {"loss.kind=supcon", "loss.mpnce.trivial=true", "loss.mpnce.weights=true"}),
        cell("mpnce_no_trivial_no_weights", {"loss.kind=mpnce", "loss.mpnce.trivial=false", "loss.mpnce.weights=false"}),
        cell("mpnce_no_weights", {"loss.kind=mpnce", "loss.mpnce.trivial=true", "loss.mpnce.weights=false"}),
        cell("mpnce", {"loss.kind=mpnce", "loss.mpnce.trivial=true", "loss.mpnce.weights=true"}),
    };
  } else if (axis == "similarity") {
    g.cells = {
        cell("shared_unified", {"similarity.mode=shared", "loss.supervision=unified"}),
        cell("domain_dependent_separated", {"similarity.mode=domain_dependent", "loss.supervision=separated"}),
        cell("domain_dependent_unified", {"similarity.mode=domain_dependent", "loss.supervision=unified"}),
    };
  } else if (axis == "awareness") {
    g.cells = {
        cell("agnostic", {"encoder.awareness=agnostic"}),
        cell("aware_head", {"encoder.awareness=head"}),
        cell("aware_encoder", {"encoder.awareness=encoder"}),
    };
  } else if (axis == "views") {
    // Total embeddings per batch stay near 256; the number of original pairs shrinks.
    const std::pair<std::size_t, std::size_t> counts[] = {{1, 1}, {2, 1}, {2, 2}, {3, 1}, {3, 2}, {4, 1}};
    for (auto [v, t] : counts) {
      g.cells.push_back(cell("v" + std::to_string(v) + "_t" + std::to_string(t),
                             {views_override(1, v - 1), "views.text_views=" + std::to_string(t),
                              "train.batch_size=" + std::to_string(256 / (v + t))}));
    }
  } else if (axis == "head") {
    g.cells = {
        cell("agnostic_1block", {"encoder.awareness=agnostic", "encoder.head_blocks=1"}),
        cell("agnostic_3blocks", {"encoder.awareness=agnostic", "encoder.head_blocks=3"}),
        cell("aware_linear", {"encoder.awareness=head", "encoder.head_blocks=0"}),
        cell("aware_1block", {"encoder.awareness=head", "encoder.head_blocks=1"}),
        cell("aware_3blocks", {"encoder.awareness=head", "encoder.head_blocks=3"}),
    };
  } else if (axis == "augmentation") {
    g.cells = {
        cell("agnostic_3weak", {"encoder.awareness=agnostic", views_override(3, 0)}),
        cell("agnostic_1weak_2strong", {"encoder.awareness=agnostic", views_override(1, 2)}),
        cell("aware_3weak", {"encoder.awareness=head", views_override(3, 0)}),
        cell("aware_1weak_2strong", {"encoder.awareness=head", views_override(1, 2)}),
    };
  } else {
    std::string allowed;
    for (const auto& a : grid_axes()) allowed += (allowed.empty() ? "" : ", ") + a;
    throw ConfigError("unknown ablation axis '" + axis + "' (allowed: " + allowed + ")");
  }
  return g;
}

std::vector<RunConfig> resolve_grid(const RunConfig& base, const GridSpec& spec) {
  if (spec.cells.empty()) throw ConfigError("ablation grid '" + spec.axis + "' has no cells");
  if (spec.seeds.empty()) throw ConfigError("ablation grid '" + spec.axis + "' has no seeds");
  const auto keys = override_keys(spec.cells.front());
  std::set<std::string> ids;
  std::vector<RunConfig> out;
  for (const auto& c : spec.cells) {
    if (!ids.insert(c.id).second) throw ConfigError("ablation cell id '" + c.id + "' is duplicated");
    if (override_keys(c) != keys) {
      throw ConfigError("ablation cell '" + c.id + "' overrides keys outside the ablated axis");
    }
    try {
      out.push_back(with_overrides(base, c.overrides));
    } catch (const ConfigError& e) {
      throw ConfigError("ablation cell '" + c.id + "': " + e.what());
    }
  }
  return out;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::vector<double> CellResult::values(const std::string& metric) const {
  std::vector<double> out;
  for (const auto& rec : finals) {
    bool found = false;
    for (const auto& [name, value] : metric_fields(rec)) {
      if (name == metric) {
        out.push_back(value);
        found = true;
        break;
      }
    }
    if (!found) throw ContractError("unknown metric '" + metric + "'");
  }
  return out;
}

const CellResult& AblationResult::cell(const std::string& id) const {
  for (const auto& c : cells) {
    if (c.cell.id == id) return c;
  }
  throw ContractError("no ablation cell '" + id + "'");
}

AblationResult run_ablation(const RunConfig& base, const GridSpec& spec,
                            const std::function<void(const AblationProgress&)>& on_run) {
  const std::vector<RunConfig> configs = resolve_grid(base, spec);
  AblationResult result;
  result.spec = spec;
  for (std::size_t c = 0; c < spec.cells.size(); ++c) {
    CellResult cr;
    cr.cell = spec.cells[c];
    cr.config = configs[c];
    for (auto seed : spec.seeds) {
      RunConfig run = configs[c];
      run.seed = seed;
      TrainResult tr = train(run);
      cr.seeds.push_back(seed);
      cr.finals.push_back(tr.history.back());
      cr.densities.push_back(tr.final_density);
      if (on_run) on_run({cr.cell.id, seed, &cr.finals.back()});
    }
    result.cells.push_back(std::move(cr));
  }
  return result;
}

}  // namespace uniclip
