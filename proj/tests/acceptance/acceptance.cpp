// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "uniclip/ablation.hpp"
#include "uniclip/io.hpp"
#include "uniclip/losses.hpp"
#include "uniclip/oracle_suite.hpp"
#include "uniclip/similarity.hpp"
#include "uniclip/training.hpp"

using namespace uniclip;

namespace {

constexpr std::size_t kSeeds = 5;
constexpr double kIdentityTolerance = 1e-12;
constexpr double kWorkedValueTolerance = 5e-5;
constexpr double kLossGapMin = 0.02;             // MP-NCE − MIL-NCE, R@1 as a fraction
constexpr double kSimilarityTieTolerance = 0.005;
constexpr double kOracleBudgetSeconds = 60.0;
constexpr double kLossGridBudgetSeconds = 30.0 * 60.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
  std::printf("%s  %2d  %-40s %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  failures += o.pass ? 0 : 1;
}

DenseMatrix random_embeddings(std::size_t rows, std::size_t width, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseMatrix z(rows, width);
  for (auto& v : z.values()) v = normal(rng);
  return z;
}

SimilarityParams random_domain_params(Rng& rng) {
  SimilarityParams p;
  p.mode = SimilarityMode::domain_dependent;
  for (std::size_t d = 0; d < kDomainCount; ++d) {
    p.log_tau[d] = uniform(rng, std::log(0.05), 0.0);
    p.offset[d] = uniform(rng, -0.3, 0.3);
  }
  return p;
}

// ---------------------------------------------------------------------------

Outcome gradient_certification() {
  const auto t0 = Clock::now();
  const auto checks = run_oracle_suite({});
  const double elapsed = seconds_since(t0);
  std::size_t passed = 0;
  double worst = 0.0;
  std::string first_failure;
  for (const auto& c : checks) {
    passed += c.passed() ? 1 : 0;
    worst = std::max(worst, c.error / c.tolerance);
    if (!c.passed() && first_failure.empty()) first_failure = " first failure: " + c.name;
  }
  Outcome o;
  o.pass = passed == checks.size() && elapsed < kOracleBudgetSeconds;
  o.detail = std::to_string(passed) + "/" + std::to_string(checks.size()) + " checks, worst error/tolerance " +
             fmt("%.2e", worst) + ", " + fmt("%.1f s", elapsed) + first_failure;
  return o;
}

Outcome closed_form_identities() {
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t k = 1 + rng() % 5, m = 1 + rng() % 8;
    std::vector<double> row;
    std::vector<std::size_t> pos, neg;
    double sp = 0.0, sn = 0.0;
    for (std::size_t a = 0; a < k + m; ++a) {
      row.push_back(uniform(rng, -4.0, 4.0));
      (a < k ? pos : neg).push_back(a);
      (a < k ? sp : sn) += std::exp(row.back());
    }
    std::vector<double> g_mil(row.size()), g_sup(row.size()), g_mp(row.size());
    milnce_row(row, pos, neg, g_mil);
    supcon_row(row, pos, neg, g_sup);
    mpnce_row(row, pos, std::vector<double>(k, 1.0), neg, g_mp);
    const double kk = static_cast<double>(k);
    for (auto q : pos) {
      const double s = std::exp(row[q]);
      const double refs[3] = {-sn / (sp * (sp + sn)), (s - (sp + sn) / kk) / (s * (sp + sn)),
                              -sn / (kk * s * (s + sn))};
      const double got[3] = {g_mil[q] / s, g_sup[q] / s, g_mp[q] / s};
      for (int f = 0; f < 3; ++f) worst = std::max(worst, std::abs(got[f] - refs[f]) / std::max(1.0, std::abs(refs[f])));
    }
  }
  // Worked instance: s = (10, 0.1) positives, Σneg = 1.
  const std::vector<double> row{std::log(10.0), std::log(0.1), 0.0};
  const std::vector<std::size_t> pos{0, 1}, neg{2};
  std::vector<double> g_mil(3), g_sup(3);
  milnce_row(row, pos, neg, g_mil);
  supcon_row(row, pos, neg, g_sup);
  const double mil_hard = g_mil[1] / 0.1;
  const double sup_easy = g_sup[0] / 10.0;
  Outcome o;
  o.pass = worst <= kIdentityTolerance && std::abs(mil_hard - (-0.00892)) <= kWorkedValueTolerance &&
           std::abs(sup_easy - 0.0401) <= kWorkedValueTolerance;
  o.detail = "max deviation " + fmt("%.1e", worst) + "; worked dL/ds: MIL-NCE " + fmt("%.5f", mil_hard) +
             ", SupCon " + fmt("%+.5f", sup_easy);
  return o;
}

Outcome offset_cancellation() {
  Rng rng(202);
  double worst_single = 0.0;
  std::size_t nonzero = 0;
  constexpr int kTrials = 50;
  for (int trial = 0; trial < kTrials; ++trial) {
    // Single domain: separated InfoNCE with one image and one text view sees only image–text pairs.
    const PairIndexSets single = build_pair_sets(4, 1, 1);
    SimilarityParams shared = SimilarityParams::initial(SimilarityMode::shared_with_offset, uniform(rng, 0.05, 1.0));
    shared.offset.fill(uniform(rng, -0.5, 0.5));
    const ScoreMatrix sm = score_matrix(random_embeddings(8, 6, rng), single.layout, shared);
    const auto g = score_backward_log(sm, separated_loss({LossKind::infonce, {}}, sm, single).grad_log_scores, shared);
    worst_single = std::max(worst_single, std::abs(g.offset[1]));

    const PairIndexSets mixed = build_pair_sets(4, 3, 1);
    const SimilarityParams dd = random_domain_params(rng);
    const ScoreMatrix sm2 = score_matrix(random_embeddings(16, 6, rng), mixed.layout, dd);
    const auto g2 = score_backward_log(sm2, compute_loss({LossKind::mpnce, {}}, sm2, mixed).grad_log_scores, dd);
    nonzero += std::max({std::abs(g2.offset[0]), std::abs(g2.offset[1]), std::abs(g2.offset[2])}) > 1e-8 ? 1 : 0;
  }
  Outcome o;
  o.pass = worst_single <= kIdentityTolerance && nonzero == kTrials;
  o.detail = "single-domain |dL/db| max " + fmt("%.1e", worst_single) + "; domain-dependent nonzero in " +
             std::to_string(nonzero) + "/" + std::to_string(kTrials);
  return o;
}

Outcome offset_shift_invariance() {
  Rng rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const PairIndexSets sets = build_pair_sets(3, 3, 1);
    const DenseMatrix z = random_embeddings(12, 6, rng);
    const SimilarityParams p = random_domain_params(rng);
    const double base = compute_loss({LossKind::mpnce, {}}, score_matrix(z, sets.layout, p), sets).loss;
    for (double c : {-1.0, 0.3, 2.0}) {
      SimilarityParams q = p;
      for (std::size_t d = 0; d < kDomainCount; ++d) q.offset[d] += c * std::exp(q.log_tau[d]);
      worst = std::max(worst, std::abs(compute_loss({LossKind::mpnce, {}}, score_matrix(z, sets.layout, q), sets).loss -
                                       base));
    }
  }
  return {worst <= kIdentityTolerance, "max |ΔL| " + fmt("%.1e", worst) + " over c in {-1, 0.3, 2}"};
}

Outcome pair_counts_and_weights() {
  bool ok = domain_weights(3, 1) == DomainWeights{1.0 / 9.0, 1.0 / 6.0, 1.0};
  std::size_t layouts = 0;
  for (std::size_t n = 1; n <= 6; ++n) {
    for (std::size_t v = 1; v <= 4; ++v) {
      for (std::size_t t = 1; t <= 3; ++t) {
        const PairIndexSets sets = build_pair_sets(n, v, t);
        const auto counts = positive_pair_counts(sets.layout);
        ok = ok && counts[0] == v * v * n && counts[1] == 2 * v * t * n && counts[2] == t * t * n;
        // Each weight is the reciprocal of an integer denominator and the brute-force pair count
        // is N times that denominator, so the weighted positive mass is exactly N.
        const auto w = domain_weights(v, t);
        const std::size_t denominators[kDomainCount] = {v * v, 2 * v * t, t * t};
        for (std::size_t d = 0; d < kDomainCount; ++d) {
          std::size_t brute = 0;
          for (std::size_t i = 0; i < sets.size(); ++i) {
            brute += static_cast<std::size_t>(domain_of(i, i, sets.layout)) == d ? 1 : 0;
            for (auto p : sets.positives[i]) brute += static_cast<std::size_t>(domain_of(i, p, sets.layout)) == d ? 1 : 0;
          }
          ok = ok && w[d] == 1.0 / static_cast<double>(denominators[d]) && brute == n * denominators[d] &&
               counts[d] == brute;
        }
        ++layouts;
      }
    }
  }
  return {ok, std::to_string(layouts) + " layouts; weights (1/9, 1/6, 1) at v=3, t=1"};
}

Outcome determinism(const RunConfig& base) {
  RunConfig cfg = base;
  cfg.seed = 11;
  cfg.train.epochs = 3;
  const TrainResult a = train(cfg);
  const TrainResult b = train(cfg);
  const std::string ca = metrics_csv(a.config, a.history);
  const std::string cb = metrics_csv(b.config, b.history);
  return {ca == cb, std::to_string(ca.size()) + "-byte metrics CSVs " + (ca == cb ? "identical" : "differ")};
}

// ---------------------------------------------------------------------------

GridSpec subset(const GridSpec& full, const std::vector<std::string>& ids) {
  GridSpec g{full.axis, {}, full.seeds};
  for (const auto& c : full.cells) {
    if (std::find(ids.begin(), ids.end(), c.id) != ids.end()) g.cells.push_back(c);
  }
  return g;
}

AblationResult run_grid(const RunConfig& base, const GridSpec& spec) {
  return run_ablation(base, spec, [](const AblationProgress& p) {
    std::fprintf(stderr, "  %s seed %llu: R@1 %.4f\n", p.cell_id.c_str(), static_cast<unsigned long long>(p.seed),
                 p.final_record->retrieval.r1_mean());
  });
}

double mean_r1(const CellResult& c) { return c.summary("r1_mean").mean; }

std::string r1_list(const std::vector<std::pair<std::string, double>>& cells) {
  std::string s;
  for (const auto& [name, v] : cells) s += (s.empty() ? "" : ", ") + name + " " + fmt("%.4f", v);
  return s;
}

}  // namespace

int main() {
  const RunConfig base = default_config();
  std::printf("acceptance suite (%zu seeds per cell)\n", kSeeds);

  report(1, "gradient certification", gradient_certification());
  report(2, "closed-form gradient identities", closed_form_identities());
  report(3, "offset cancellation", offset_cancellation());
  report(4, "offset-shift invariance", offset_shift_invariance());

  // Loss grid: criteria 5, 8 and 9. Its MP-NCE cell is the default configuration and is
  // reused as the reference cell of the similarity and awareness grids.
  const auto t_loss = Clock::now();
  const AblationResult loss = run_grid(base, standard_grid("loss", kSeeds));
  const double loss_seconds = seconds_since(t_loss);
  const CellResult& mil = loss.cell("milnce");
  const CellResult& sup = loss.cell("supcon");
  const CellResult& plain = loss.cell("mpnce_no_trivial_no_weights");
  const CellResult& full = loss.cell("mpnce");
  {
    const double a = mean_r1(mil), b = mean_r1(sup), c = mean_r1(plain), d = mean_r1(full);
    Outcome o;
    o.pass = a <= b && b <= c && c <= d && d - a >= kLossGapMin && loss_seconds < kLossGridBudgetSeconds;
    o.detail = "R@1 " + r1_list({{"MIL-NCE", a}, {"SupCon", b}, {"MP-NCE plain", c},
                                 {"MP-NCE no-weights", mean_r1(loss.cell("mpnce_no_weights"))}, {"MP-NCE", d}}) +
               "; gap " + fmt("%+.4f", d - a) + "; " + fmt("%.0f s", loss_seconds);
    report(5, "loss ordering", o);
  }

  {
    const GridSpec spec = subset(standard_grid("similarity", kSeeds), {"shared_unified", "domain_dependent_separated"});
    const AblationResult sim = run_grid(base, spec);
    const double shared = mean_r1(sim.cell("shared_unified"));
    const double separated = mean_r1(sim.cell("domain_dependent_separated"));
    const double unified = mean_r1(full);
    Outcome o;
    o.pass = unified > separated && unified > shared && separated + kSimilarityTieTolerance >= shared;
    o.detail = "R@1 " + r1_list({{"dd+unified", unified}, {"dd+separated", separated}, {"shared+unified", shared}});
    report(6, "similarity-measure ordering", o);
  }

  {
    const GridSpec spec = subset(standard_grid("awareness", kSeeds), {"agnostic", "aware_encoder"});
    const AblationResult aw = run_grid(base, spec);
    const double agnostic = mean_r1(aw.cell("agnostic"));
    const double encoder = mean_r1(aw.cell("aware_encoder"));
    const double head = mean_r1(full);
    Outcome o;
    o.pass = head > agnostic && head > encoder;
    o.detail = "R@1 " + r1_list({{"aware head", head}, {"agnostic", agnostic}, {"aware encoder", encoder}});
    report(7, "augmentation-awareness ordering", o);
  }

  {
    const auto b_ii = full.values("b_ii");
    const auto b_it = full.values("b_it");
    std::size_t hits = 0;
    std::string pairs;
    for (std::size_t s = 0; s < b_ii.size(); ++s) {
      hits += b_ii[s] > b_it[s] ? 1 : 0;
      pairs += (s ? ", " : "") + fmt("%.3f", b_ii[s]) + "/" + fmt("%.3f", b_it[s]);
    }
    report(8, "learned offset b(ii) > b(it)",
           {hits >= 4, std::to_string(hits) + "/" + std::to_string(b_ii.size()) + " seeds (b_ii/b_it: " + pairs + ")"});
  }

  {
    const double a_mp = full.summary("auc_all").mean;
    const double a_mil = mil.summary("auc_all").mean;
    const double a_sup = sup.summary("auc_all").mean;
    report(9, "density separation",
           {a_mp > a_mil && a_mp > a_sup,
            "pooled AUC MP-NCE " + fmt("%.4f", a_mp) + ", MIL-NCE " + fmt("%.4f", a_mil) + ", SupCon " +
                fmt("%.4f", a_sup)});
  }

  report(10, "pair counts and domain weights", pair_counts_and_weights());
  report(11, "determinism", determinism(base));

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
