#include "nesua/evaluate.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "nesua/errors.hpp"
#include "nesua/parallel.hpp"

namespace nesua {

namespace fs = std::filesystem;

PolicyReport evaluate_policy(const std::string& policy, const HardAssociation& assoc, const Scenario& s,
                             const PowerParams& p, const GbrConfig& gbr) {
  const std::size_t n_ues = s.n_ues();
  if (assoc.n_ues() != n_ues || static_cast<std::size_t>(assoc.n_cells) != s.n_cells()) {
    throw ContractError("evaluate_policy: association is " + std::to_string(assoc.n_ues()) + "x" +
                        std::to_string(assoc.n_cells) + ", scenario is " + std::to_string(n_ues) + "x" +
                        std::to_string(s.n_cells()));
  }
  if (!gbr.gbr_ues.empty() && gbr.gbr_ues.size() != n_ues) {
    throw ContractError("evaluate_policy: GBR mask length differs from the UE count");
  }
  if (!(gbr.demand_mbps > 0.0)) throw ArgumentError("evaluate_policy: demand must be positive");

  PolicyReport r;
  r.policy = policy;
  r.association = assoc;
  r.power = network_power_hard(assoc, prb_demand_matrix(s), p, s.n_prb_total);
  for (std::size_t n = 0; n < r.power.cells.size(); ++n) {
    if (!r.power.cells[n].active) r.switched_off_cells.push_back(static_cast<int>(n));
  }

  const double demand_bps = gbr.demand_mbps * 1e6;
  const double total = static_cast<double>(s.n_prb_total);
  for (std::size_t k = 0; k < n_ues; ++k) {
    const auto& cell = r.power.cells[static_cast<std::size_t>(assoc.assignment[k])];
    const double share = cell.load_prb > total ? total / cell.load_prb : 1.0;
    r.served_bps += demand_bps * share;
    if (gbr.gbr_ues.empty() || gbr.gbr_ues[k]) r.l_min_bps += demand_bps;
  }
  r.gbr_margin_bps = r.served_bps - r.l_min_bps;
  r.gbr_satisfied = r.gbr_margin_bps >= -1e-9 * std::max(1.0, r.l_min_bps);
  return r;
}

double gain_percent(double p_gnn_w, double p_base_w) {
  if (!(p_base_w > 0.0)) throw ArgumentError("gain_percent: baseline power must be positive");
  return 100.0 * (p_base_w - p_gnn_w) / p_base_w;
}

std::vector<PolicyReport> compare_policies(const Sample& sample, const GatModel& model, const PowerParams& p,
                                           const EvalOptions& opt) {
  const Scenario& s = sample.scenario;
  std::vector<PolicyReport> out;
  out.push_back(evaluate_policy(kPolicyGnn, harden(infer(sample.graph, model)), s, p, opt.gbr));
  out.push_back(evaluate_policy(kPolicyRsrp, associate_rsrp(s), s, p, opt.gbr));
  out.push_back(evaluate_policy(kPolicyGaSubsinr, associate_ga_subsinr(s, opt.subsinr), s, p, opt.gbr));
  if (opt.include_oracle && oracle_search_size(s.n_ues(), s.n_cells()) <= opt.oracle_budget) {
    const auto o = associate_oracle(s, p, opt.oracle_budget);
    out.push_back(evaluate_policy(kPolicyOracle, o.association, s, p, opt.gbr));
  }
  return out;
}

MeanSe mean_se(std::span<const double> xs) {
  MeanSe r;
  if (xs.empty()) return r;
  const double n = static_cast<double>(xs.size());
  r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() < 2) return r;
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return r;
}

namespace {

const PolicyReport* find_policy(const std::vector<PolicyReport>& reports, const char* name) {
  for (const auto& r : reports) {
    if (r.policy == name) return &r;
  }
  return nullptr;
}

PointStats aggregate(const std::vector<std::vector<PolicyReport>>& instances, std::size_t n_cells) {
  PointStats st;
  st.n_instances = instances.size();
  st.n_cells = n_cells;
  std::vector<double> gnn, rsrp, ga, oracle, g_rsrp, g_ga, off;
  std::size_t gbr_ok = 0, overloaded = 0;
  bool oracle_everywhere = !instances.empty();
  for (const auto& reports : instances) {
    const auto* g = find_policy(reports, kPolicyGnn);
    const auto* r = find_policy(reports, kPolicyRsrp);
    const auto* a = find_policy(reports, kPolicyGaSubsinr);
    const auto* o = find_policy(reports, kPolicyOracle);
    gnn.push_back(g->total_w());
    rsrp.push_back(r->total_w());
    ga.push_back(a->total_w());
    g_rsrp.push_back(gain_percent(g->total_w(), r->total_w()));
    g_ga.push_back(gain_percent(g->total_w(), a->total_w()));
    off.push_back(static_cast<double>(g->switched_off_count()));
    if (g->gbr_satisfied) ++gbr_ok;
    if (g->any_overload()) ++overloaded;
    if (o) {
      oracle.push_back(o->total_w());
    } else {
      oracle_everywhere = false;
    }
  }
  st.gnn_w = mean_se(gnn);
  st.rsrp_w = mean_se(rsrp);
  st.ga_w = mean_se(ga);
  if (oracle_everywhere) st.oracle_w = mean_se(oracle);
  st.gain_vs_rsrp = mean_se(g_rsrp);
  st.gain_vs_ga = mean_se(g_ga);
  st.switched_off = mean_se(off);
  if (n_cells > 0) st.switched_off_fraction = st.switched_off.mean / static_cast<double>(n_cells);
  if (!instances.empty()) {
    st.gnn_gbr_satisfied = static_cast<double>(gbr_ok) / static_cast<double>(instances.size());
    st.gnn_overloaded = static_cast<double>(overloaded) / static_cast<double>(instances.size());
  }
  return st;
}

}  // namespace

Evaluation evaluate_test_set(std::span<const Sample> test, const GatModel& model, const PowerParams& p,
                             const EvalOptions& opt) {
  Evaluation e;
  e.instances.resize(test.size());
  for (const auto& smp : test) e.scenario_seeds.push_back(smp.scenario.seed);
  parallel_for(
      test.size(), [&](std::size_t i) { e.instances[i] = compare_policies(test[i], model, p, opt); }, opt.threads);
  e.stats = aggregate(e.instances, test.empty() ? 0 : test.front().scenario.n_cells());
  return e;
}

SweepResult sweep_bandwidth(std::span<const double> bandwidths_mhz, std::span<const int> ue_counts,
                            const std::function<GridInput(double, int)>& lookup, const PowerParams& p,
                            const EvalOptions& opt) {
  SweepResult r;
  r.variable = "bandwidth";
  for (double w : bandwidths_mhz) {
    for (int k : ue_counts) {
      SweepPoint pt;
      pt.coords = {{"bandwidth_mhz", w}, {"n_ues", static_cast<double>(k)}};
      const GridInput in = lookup(w, k);
      if (in.model) pt.stats = evaluate_test_set(in.test, *in.model, p, opt).stats;
      r.points.push_back(std::move(pt));
    }
  }
  return r;
}

SweepResult sweep_lambda(std::span<const double> ratios, const std::function<GridInput(double)>& lookup,
                         const PowerParams& p, const EvalOptions& opt) {
  SweepResult r;
  r.variable = "lambda";
  for (double ratio : ratios) {
    SweepPoint pt;
    pt.coords = {{"lambda_ratio", ratio}};
    const GridInput in = lookup(ratio);
    if (in.model) pt.stats = evaluate_test_set(in.test, *in.model, p, opt).stats;
    r.points.push_back(std::move(pt));
  }
  return r;
}

std::vector<double> moving_average(std::span<const double> xs, std::size_t window) {
  std::vector<double> out;
  if (window == 0 || xs.size() < window) return out;
  for (std::size_t i = 0; i + window <= xs.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = i; j < i + window; ++j) acc += xs[j];
    out.push_back(acc / static_cast<double>(window));
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

const char* const kStatColumns =
    "status,n_instances,gnn_w_mean,gnn_w_se,rsrp_w_mean,rsrp_w_se,ga_subsinr_w_mean,ga_subsinr_w_se,"
    "oracle_w_mean,oracle_w_se,gain_vs_rsrp_pct,gain_vs_ga_subsinr_pct,gain_vs_rsrp_pct_inst_mean,"
    "gain_vs_rsrp_pct_inst_se,gain_vs_ga_subsinr_pct_inst_mean,gain_vs_ga_subsinr_pct_inst_se,"
    "switched_off_mean,switched_off_se,switched_off_fraction,gbr_satisfied_share,overloaded_share";

void stat_fields(std::ostream& os, const std::optional<PointStats>& st) {
  if (!st) {
    os << "missing";
    for (int i = 0; i < 20; ++i) os << ",";
    return;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const MeanSe oracle = st->oracle_w.value_or(MeanSe{nan, nan});
  os << "ok," << st->n_instances << ',' << format_double(st->gnn_w.mean) << ',' << format_double(st->gnn_w.se) << ','
     << format_double(st->rsrp_w.mean) << ',' << format_double(st->rsrp_w.se) << ',' << format_double(st->ga_w.mean)
     << ',' << format_double(st->ga_w.se) << ',' << format_double(oracle.mean) << ',' << format_double(oracle.se)
     << ',' << format_double(st->gain_of_means_vs_rsrp()) << ',' << format_double(st->gain_of_means_vs_ga()) << ','
     << format_double(st->gain_vs_rsrp.mean) << ',' << format_double(st->gain_vs_rsrp.se) << ','
     << format_double(st->gain_vs_ga.mean) << ',' << format_double(st->gain_vs_ga.se) << ','
     << format_double(st->switched_off.mean) << ',' << format_double(st->switched_off.se) << ','
     << format_double(st->switched_off_fraction) << ',' << format_double(st->gnn_gbr_satisfied) << ','
     << format_double(st->gnn_overloaded);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  f.flush();
  if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace

std::string sweep_csv(const SweepResult& r) {
  std::ostringstream os;
  const auto& first = r.points.empty() ? SweepPoint{} : r.points.front();
  for (const auto& [name, _] : first.coords) os << name << ',';
  os << kStatColumns << '\n';
  for (const auto& pt : r.points) {
    for (const auto& [_, v] : pt.coords) os << format_double(v) << ',';
    stat_fields(os, pt.stats);
    os << '\n';
  }
  return os.str();
}

fs::path write_sweep_csv(const SweepResult& r, const fs::path& dir, const std::string& timestamp) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path path = dir / ("sweep_" + r.variable + "_" + timestamp + ".csv");
  write_text(path, sweep_csv(r));
  return path;
}

std::string comparison_csv(const Evaluation& e) {
  std::ostringstream os;
  const bool oracle = !e.instances.empty() && find_policy(e.instances.front(), kPolicyOracle) != nullptr;
  os << "instance,scenario_seed,gnn_w,rsrp_w,ga_subsinr_w";
  if (oracle) os << ",oracle_w";
  os << ",gain_vs_rsrp_pct,gain_vs_ga_subsinr_pct,gnn_switched_off,gnn_overloaded,gnn_served_bps,gnn_gbr_margin_bps\n";
  for (std::size_t i = 0; i < e.instances.size(); ++i) {
    const auto& reps = e.instances[i];
    const auto* g = find_policy(reps, kPolicyGnn);
    const auto* r = find_policy(reps, kPolicyRsrp);
    const auto* a = find_policy(reps, kPolicyGaSubsinr);
    os << i << ',' << (i < e.scenario_seeds.size() ? std::to_string(e.scenario_seeds[i]) : std::string()) << ','
       << format_double(g->total_w()) << ',' << format_double(r->total_w()) << ','
       << format_double(a->total_w());
    if (oracle) {
      const auto* o = find_policy(reps, kPolicyOracle);
      os << ',' << (o ? format_double(o->total_w()) : std::string("nan"));
    }
    os << ',' << format_double(gain_percent(g->total_w(), r->total_w())) << ','
       << format_double(gain_percent(g->total_w(), a->total_w())) << ',' << g->switched_off_count() << ','
       << (g->any_overload() ? 1 : 0) << ',' << format_double(g->served_bps) << ','
       << format_double(g->gbr_margin_bps) << '\n';
  }
  return os.str();
}

std::string summary_csv(const PointStats& st) {
  std::ostringstream os;
  os << kStatColumns << '\n';
  stat_fields(os, st);
  os << '\n';
  return os.str();
}

std::vector<fs::path> export_heatmaps(const Scenario& s, std::span<const PolicyReport> reports, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  const std::size_t n_cells = s.n_cells();
  auto header = [&] {
    std::string h = "ue";
    for (std::size_t n = 0; n < n_cells; ++n) h += ",cell_" + std::to_string(n);
    return h + "\n";
  };
  std::vector<fs::path> written;

  std::ostringstream sinr;
  sinr << header();
  for (std::size_t k = 0; k < s.n_ues(); ++k) {
    sinr << k;
    for (std::size_t n = 0; n < n_cells; ++n) sinr << ',' << format_double(s.sinr_db(k, n));
    sinr << '\n';
  }
  written.push_back(dir / "heatmap_sinr.csv");
  write_text(written.back(), sinr.str());

  for (const auto& r : reports) {
    if (r.association.n_ues() != s.n_ues()) throw ContractError("export_heatmaps: report does not match scenario");
    std::ostringstream os;
    os << header();
    for (std::size_t k = 0; k < s.n_ues(); ++k) {
      os << k;
      for (std::size_t n = 0; n < n_cells; ++n) {
        os << ',' << (r.association.assignment[k] == static_cast<int>(n) ? 1 : 0);
      }
      os << '\n';
    }
    written.push_back(dir / ("heatmap_" + r.policy + ".csv"));
    write_text(written.back(), os.str());
  }

  std::ostringstream coords;
  coords << "kind,index,x_m,y_m";
  for (const auto& r : reports) coords << ",serving_" << r.policy;
  coords << '\n';
  for (std::size_t n = 0; n < s.bs_positions.size(); ++n) {
    coords << "bs," << n << ',' << format_double(s.bs_positions[n].x) << ',' << format_double(s.bs_positions[n].y);
    for (std::size_t i = 0; i < reports.size(); ++i) coords << ",";
    coords << '\n';
  }
  for (std::size_t k = 0; k < s.ue_positions.size(); ++k) {
    coords << "ue," << k << ',' << format_double(s.ue_positions[k].x) << ',' << format_double(s.ue_positions[k].y);
    for (const auto& r : reports) coords << ',' << r.association.assignment[k];
    coords << '\n';
  }
  written.push_back(dir / "coordinates.csv");
  write_text(written.back(), coords.str());
  return written;
}

}  // namespace nesua
