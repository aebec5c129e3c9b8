#include "gnnbias/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gnnbias/error.hpp"

namespace gnnbias {

Matrix v_star(const Pattern& p, std::size_t palette_size) {
  Matrix v(palette_size, 1);
  for (Color c : p.colors()) {
    if (c >= palette_size) throw InvalidArgument("pattern color outside the palette");
    v[c] = 1.0;
  }
  return v;
}

Matrix theory_reps(const Graph& g, std::size_t palette_size) {
  Matrix v(g.num_nodes(), palette_size);
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    if (g.color(i) >= palette_size) throw InvalidArgument("node color outside the palette");
    v(i, g.color(i)) += 1.0;
    for (NodeId j : g.neighbors(i)) v(i, g.color(j)) += 1.0;
  }
  return v;
}

TheoryBounds measure_bounds(const std::vector<Graph>& graphs, std::size_t palette_size) {
  TheoryBounds b;
  for (const Graph& g : graphs) {
    const Matrix v = theory_reps(g, palette_size);
    for (std::size_t i = 0; i < v.rows(); ++i) {
      b.theta_d = std::max(b.theta_d, dot(v.row(i), v.row(i)));
      for (std::size_t j = i + 1; j < v.rows(); ++j) b.theta = std::max(b.theta, dot(v.row(i), v.row(j)));
    }
  }
  return b;
}

TheoryBounds measure_bounds(const PartitionedDataset& ds) { return measure_bounds(ds.graphs, ds.palette_size); }

AnchorAlignment check_anchor_alignment(const PartitionedDataset& ds) {
  AnchorAlignment r;
  const Matrix vs = v_star(ds.pattern, ds.palette_size);
  for (std::size_t k = 0; k < ds.graphs.size(); ++k) {
    if (ds.tags[k] != Partition::d1) continue;
    const Graph& g = ds.graphs[k];
    ++r.d1_graphs;
    const auto anchor = anchor_center(g, ds.pattern);
    if (!anchor) {
      ++r.missing_anchor;
      continue;
    }
    const Matrix v = theory_reps(g, ds.palette_size);
    const auto row = v.row(*anchor);
    if (dot(row, vs.values()) > 0.0) ++r.positive;
    bool covers = true;
    for (Color c : ds.pattern.colors()) covers = covers && row[c] > 0.0;
    if (covers) ++r.covers_pattern;
  }
  return r;
}

bool DirectionWitnesses::passed() const {
  return !directions.empty() &&
         std::all_of(witnesses.begin(), witnesses.end(), [](const auto& w) { return w.has_value(); });
}

std::vector<Matrix> orthogonal_directions(const Pattern& p, std::size_t palette_size) {
  std::vector<Matrix> out;
  const auto& colors = p.colors();
  for (Color a : colors) {
    for (Color b : colors) {
      if (a == b) continue;
      Matrix u(palette_size, 1);
      u[a] = 1.0;
      u[b] = -1.0;
      out.push_back(u);
    }
  }
  if (colors.size() >= 3) {
    for (Color a : colors) {
      Matrix u(palette_size, 1);
      for (Color b : colors) u[b] = -1.0;
      u[a] = static_cast<double>(colors.size() - 1);
      out.push_back(u);
    }
  }
  return out;
}

DirectionWitnesses check_direction_witnesses(const PartitionedDataset& ds) {
  DirectionWitnesses r;
  r.directions = orthogonal_directions(ds.pattern, ds.palette_size);
  std::vector<Matrix> reps;
  for (std::size_t k = 0; k < ds.graphs.size(); ++k) {
    if (ds.tags[k] == Partition::d0) reps.push_back(theory_reps(ds.graphs[k], ds.palette_size));
  }
  for (const Matrix& u : r.directions) {
    std::optional<std::size_t> found;
    for (std::size_t k = 0; k < reps.size() && !found; ++k) {
      bool ok = true;
      for (std::size_t i = 0; i < reps[k].rows() && ok; ++i) ok = dot(reps[k].row(i), u.values()) <= 0.0;
      if (ok) found = k;
    }
    r.witnesses.push_back(found);
  }
  return r;
}

bool no_node_covers_pattern(const Graph& g, const Pattern& p, std::size_t palette_size) {
  const Matrix v = theory_reps(g, palette_size);
  for (std::size_t i = 0; i < v.rows(); ++i) {
    bool covers = true;
    for (Color c : p.colors()) covers = covers && v(i, c) > 0.0;
    if (covers) return false;
  }
  return true;
}

AlignmentProbe default_probe(const PartitionedDataset& ds) {
  AlignmentProbe probe;
  probe.pattern = ds.pattern;
  probe.palette_size = ds.palette_size;
  bool have_d1 = false;
  bool have_d0 = false;
  for (std::size_t k = 0; k < ds.graphs.size(); ++k) {
    if (!have_d1 && ds.tags[k] == Partition::d1) {
      probe.d1 = ds.graphs[k];
      have_d1 = true;
    }
    if (!have_d0 && ds.tags[k] == Partition::d0) {
      probe.d0 = ds.graphs[k];
      have_d0 = true;
    }
  }
  if (!have_d1 || !have_d0) throw InvalidArgument("alignment probes need a D1 and a D0 graph");
  return probe;
}

AlignmentRecord alignment_record(const ModelParams& m, const ModelParams& previous, const AlignmentProbe& probe,
                                 std::size_t step) {
  if (!m.flags.theory_mode || m.pooling != Pooling::attn) {
    throw InvalidArgument("alignment monitoring requires a theory-mode attention model");
  }
  const auto anchor = anchor_center(probe.d1, probe.pattern);
  if (!anchor) throw InvalidArgument("D1 probe graph has no anchor metadata");
  const std::size_t k = m.palette_size();
  const Matrix vs = v_star(probe.pattern, k);
  const Matrix& w = m.classifier;
  const Matrix& a = m.attn;

  AlignmentRecord r;
  r.step = step;
  r.dot_w_vstar = dot(w.values(), vs.values());
  r.dot_a_vstar = dot(a.values(), vs.values());
  r.psi_s = r.dot_w_vstar;
  double dw = 0.0;
  for (std::size_t c = 0; c < k; ++c) dw += vs[c] * (w[c] - previous.classifier[c]);
  r.delta_w_vstar = dw;

  const Matrix v1 = node_reps(probe.d1, m);
  const Matrix alpha1 = attention_weights(v1, m);
  r.alpha_s = alpha1[*anchor];
  r.psi_max = -std::numeric_limits<double>::infinity();
  std::size_t satisfied = 0;
  std::size_t conditions = 0;
  for (std::size_t i = 0; i < v1.rows(); ++i) {
    if (i == *anchor) continue;
    const double wi = dot(w.values(), v1.row(i));
    const double ai = dot(a.values(), v1.row(i));
    r.psi_max = std::max(r.psi_max, wi);
    satisfied += (r.dot_w_vstar > wi) + (r.dot_a_vstar > ai);
    conditions += 2;
  }
  r.q = r.psi_max > 0.0 ? r.psi_s / r.psi_max : std::numeric_limits<double>::quiet_NaN();
  r.dominance_fraction = conditions ? static_cast<double>(satisfied) / static_cast<double>(conditions) : 0.0;

  const Matrix alpha0 = attention_weights(node_reps(probe.d0, m), m);
  const double as = r.alpha_s;
  double threshold = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < std::min(alpha1.rows(), alpha0.rows()); ++j) {
    if (j == *anchor) continue;
    const double aj = alpha1[j];
    const double bj = alpha0[j];
    const double denom = as * (1.0 - as) + aj * as;
    if (denom > 0.0) threshold = std::max(threshold, (bj - aj) / denom + 1.0);
  }
  r.q_threshold = threshold;
  return r;
}

const std::vector<std::string>& alignment_columns() {
  static const std::vector<std::string> cols{"dot_w_vstar", "dot_a_vstar", "psi_s",         "psi_max",
                                             "q",           "alpha_s",     "delta_w_vstar", "dominance_fraction"};
  return cols;
}

Monitor alignment_monitor(const AlignmentProbe& probe, std::shared_ptr<std::vector<AlignmentRecord>> sink) {
  Monitor mon;
  mon.columns = alignment_columns();
  mon.observe = [probe, sink](const StepContext& ctx) {
    AlignmentRecord r = alignment_record(*ctx.params, *ctx.previous, probe, ctx.step);
    r.train_acc = ctx.eval.accuracy;
    if (sink) sink->push_back(r);
    return std::vector<double>{r.dot_w_vstar, r.dot_a_vstar, r.psi_s,         r.psi_max,
                               r.q,           r.alpha_s,     r.delta_w_vstar, r.dominance_fraction};
  };
  return mon;
}

std::string alignment_csv(const std::vector<AlignmentRecord>& records) {
  std::ostringstream out;
  out << "step";
  for (const auto& c : alignment_columns()) out << ',' << c;
  out << '\n';
  char buf[64];
  for (const auto& r : records) {
    out << r.step;
    for (double x : {r.dot_w_vstar, r.dot_a_vstar, r.psi_s, r.psi_max, r.q, r.alpha_s, r.delta_w_vstar,
                     r.dominance_fraction}) {
      std::snprintf(buf, sizeof buf, "%.6g", x);
      out << ',' << buf;
    }
    out << '\n';
  }
  return out.str();
}

PreservationSummary preservation_report(const std::vector<AlignmentRecord>& trace) {
  PreservationSummary s;
  if (!trace.empty()) {
    s.final_w_aligned = trace.back().dot_w_vstar > 0.0;
    s.final_a_aligned = trace.back().dot_a_vstar > 0.0;
  }
  if (trace.size() < 2) return s;
  s.defined = true;
  std::size_t positive = 0;
  std::size_t positive_before = 0;
  std::size_t dominated = 0;
  for (std::size_t t = 1; t < trace.size(); ++t) {
    const AlignmentRecord& r = trace[t];
    ++s.steps;
    const bool up = r.delta_w_vstar > 0.0;
    positive += up;
    if (trace[t - 1].train_acc < 1.0) {
      ++s.steps_before_fit;
      positive_before += up;
    }
    dominated += r.dominance_fraction == 1.0;
    if (!s.first_q_above_threshold && std::isfinite(r.q) && r.q > r.q_threshold) s.first_q_above_threshold = r.step;
  }
  s.frac_delta_w_positive = static_cast<double>(positive) / static_cast<double>(s.steps);
  s.frac_delta_w_positive_before_fit =
      s.steps_before_fit ? static_cast<double>(positive_before) / static_cast<double>(s.steps_before_fit) : 0.0;
  s.frac_full_dominance = static_cast<double>(dominated) / static_cast<double>(s.steps);
  return s;
}

}  // namespace gnnbias
