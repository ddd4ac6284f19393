// Copyright 2026 The dualgrasp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "dualgrasp/harness.hpp"

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"

namespace dualgrasp {
namespace {

namespace fs = std::filesystem;

// n records at 1 kHz, all contacts open, phase ante.
EpisodeLog synthetic_log(int n) {
  EpisodeLog log;
  log.records.resize(n);
  for (int k = 0; k < n; ++k) {
    LogRecord& r = log.records[k];
    r.t = k * 1e-3;
    for (auto& c : r.contacts) c.gap = 0.01;
  }
  return log;
}

void close_robot(LogRecord* r, int robot) {
  r->contacts[2 * robot].gap = -1e-5;
  r->contacts[2 * robot].in_contact = true;
}

MetricsContext context() {
  MetricsContext c;
  c.goal = {0.0, 0.1, 0.0};
  c.sim.success_hold = 0.002;
  return c;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// Minimal XML well-formedness check: balanced, properly nested tags, quoted
// attributes, and only the predefined entities in text.
bool well_formed_xml(const std::string& doc, std::string* why) {
  std::vector<std::string> stack;
  size_t i = 0;
  bool root_seen = false;
  auto fail = [&](const std::string& m) {
    *why = m + " at offset " + std::to_string(i);
    return false;
  };
  while (i < doc.size()) {
    if (doc[i] != '<') {
      if (doc[i] == '&') {
        const size_t semi = doc.find(';', i);
        if (semi == std::string::npos) return fail("bare ampersand");
        const std::string ent = doc.substr(i, semi - i + 1);
        if (ent != "&amp;" && ent != "&lt;" && ent != "&gt;" && ent != "&quot;" &&
            ent != "&apos;" && ent.rfind("&#", 0) != 0) {
          return fail("unknown entity " + ent);
        }
      } else if (stack.empty() && !std::isspace(static_cast<unsigned char>(doc[i]))) {
        return fail("text outside the root element");
      }
      ++i;
      continue;
    }
    if (doc.compare(i, 5, "<?xml") == 0) {
      const size_t end = doc.find("?>", i);
      if (end == std::string::npos || i != 0) return fail("bad declaration");
      i = end + 2;
      continue;
    }
    if (doc.compare(i, 4, "<!--") == 0) {
      const size_t end = doc.find("-->", i);
      if (end == std::string::npos) return fail("open comment");
      i = end + 3;
      continue;
    }
    // Find the end of the tag, skipping quoted attribute values.
    size_t j = i + 1;
    char quote = 0;
    for (; j < doc.size(); ++j) {
      if (quote) {
        if (doc[j] == quote) quote = 0;
        else if (doc[j] == '<') return fail("'<' inside an attribute");
      } else if (doc[j] == '"' || doc[j] == '\'') {
        quote = doc[j];
      } else if (doc[j] == '>') {
        break;
      }
    }
    if (j >= doc.size()) return fail("unterminated tag");
    std::string tag = doc.substr(i + 1, j - i - 1);
    i = j + 1;
    if (!tag.empty() && tag[0] == '/') {
      const std::string name = tag.substr(1);
      if (stack.empty() || stack.back() != name) return fail("mismatched </" + name + ">");
      stack.pop_back();
      continue;
    }
    const bool self_closing = !tag.empty() && tag.back() == '/';
    if (self_closing) tag.pop_back();
    size_t n = 0;
    while (n < tag.size() && !std::isspace(static_cast<unsigned char>(tag[n]))) ++n;
    const std::string name = tag.substr(0, n);
    if (name.empty() || !(std::isalpha(static_cast<unsigned char>(name[0])))) {
      return fail("bad tag name");
    }
    // Attributes: name="value" pairs.
    std::istringstream attrs(tag.substr(n));
    std::string rest = tag.substr(n);
    size_t a = 0;
    while (a < rest.size()) {
      if (std::isspace(static_cast<unsigned char>(rest[a]))) {
        ++a;
        continue;
      }
      const size_t eq = rest.find('=', a);
      if (eq == std::string::npos || eq + 1 >= rest.size()) return fail("bad attribute");
      const char q = rest[eq + 1];
      if (q != '"' && q != '\'') return fail("unquoted attribute");
      const size_t close = rest.find(q, eq + 2);
      if (close == std::string::npos) return fail("unterminated attribute");
      a = close + 1;
    }
    if (stack.empty()) {
      if (root_seen) return fail("second root element");
      root_seen = true;
    }
    if (!self_closing) stack.push_back(name);
  }
  if (!stack.empty()) {
    *why = "unclosed <" + stack.back() + ">";
    return false;
  }
  if (!root_seen) {
    *why = "no root element";
    return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

TEST(Metrics, SimultaneousImpactsGiveZeroGap) {
  EpisodeLog log = synthetic_log(20);
  for (int k = 7; k < 20; ++k) {
    close_robot(&log.records[k], 0);
    close_robot(&log.records[k], 1);
  }
  const Metrics m = compute_metrics(log, context());
  EXPECT_EQ(m.impact_time[0], log.records[7].t);
  EXPECT_EQ(m.impact_time[1], log.records[7].t);
  EXPECT_EQ(m.impact_time_gap, 0.0);
}

TEST(Metrics, ImpactTimeIsTheFirstClosedGapOfEitherPoint) {
  EpisodeLog log = synthetic_log(20);
  log.records[4].contacts[1].gap = 0.0;  // touching counts
  log.records[9].contacts[3].gap = -1e-6;
  const Metrics m = compute_metrics(log, context());
  EXPECT_EQ(m.impact_time[0], log.records[4].t);
  EXPECT_EQ(m.impact_time[1], log.records[9].t);
  EXPECT_NEAR(m.impact_time_gap, 5e-3, 1e-15);
}

TEST(Metrics, ConstantTorqueHasNoJump) {
  EpisodeLog log = synthetic_log(10);
  for (auto& r : log.records) r.tau = {Vec3(1.0, -2.0, 3.0), Vec3(0.5, 0.5, 0.5)};
  for (int k = 5; k < 10; ++k) log.records[k].phase = Phase::kPost;
  const Metrics m = compute_metrics(log, context());
  EXPECT_EQ(m.max_torque_jump_at_post_entry, 0.0);
  EXPECT_EQ(m.peak_torque, 3.0);
  EXPECT_FALSE(m.torque_bound_violated);
}

TEST(Metrics, KnownTorqueStepAtPostEntry) {
  EpisodeLog log = synthetic_log(2);
  log.records[0].phase = Phase::kInterim;
  log.records[1].phase = Phase::kPost;
  log.records[0].tau = {Vec3(1.0, 1.0, 1.0), Vec3(2.0, 2.0, 2.0)};
  log.records[1].tau = {Vec3(1.0, 1.0, 1.0), Vec3(2.0, -1.0, 2.5)};
  const Metrics m = compute_metrics(log, context());
  EXPECT_EQ(m.post_entry_time, log.records[1].t);
  EXPECT_EQ(m.max_torque_jump_at_post_entry, 3.0);
}

TEST(Metrics, InterimRateWindowRunsFromFirstImpactToPostEntry) {
  EpisodeLog log = synthetic_log(12);
  // Before the first impact: a big change that must not count.
  log.records[2].tau[0] = Vec3(10.0, 0.0, 0.0);
  for (int k = 2; k < 12; ++k) log.records[k].tau[0].x() = 10.0;
  for (int k = 4; k < 12; ++k) close_robot(&log.records[k], 1);
  log.records[6].tau[1] = Vec3(0.0, 0.2, 0.0);  // 200 N m/s
  for (int k = 7; k < 12; ++k) log.records[k].tau[1] = Vec3(0.0, 0.2, 0.0);
  for (int k = 9; k < 12; ++k) log.records[k].phase = Phase::kPost;
  log.records[9].tau[0].x() = 20.0;  // the post-entry jump is excluded
  const Metrics m = compute_metrics(log, context());
  EXPECT_NEAR(m.interim_torque_rate_peak, 200.0, 1e-9);
  EXPECT_EQ(m.max_torque_jump_at_post_entry, 10.0);
}

TEST(Metrics, VelocityMismatchAtPostEntry) {
  EpisodeLog log = synthetic_log(4);
  log.records[2].phase = Phase::kPost;
  log.records[3].phase = Phase::kPost;
  log.records[2].box.dp = Vec2(0.1, 0.3);
  log.records[2].box_ref = Vec3(0.1, 0.34, 5.0);  // angular part ignored
  log.records[3].box.dp = Vec2(9.0, 9.0);
  const Metrics m = compute_metrics(log, context());
  EXPECT_NEAR(m.post_velocity_mismatch, 0.04, 1e-15);
}

TEST(Metrics, TorqueBoundViolationIsFlagged) {
  EpisodeLog log = synthetic_log(3);
  log.records[1].tau[1] = Vec3(0.0, -40.5, 0.0);
  const Metrics m = compute_metrics(log, context());
  EXPECT_TRUE(m.torque_bound_violated);
  EXPECT_EQ(m.peak_torque, 40.5);
}

TEST(Metrics, IncompleteEpisodeHasPartialMetrics) {
  EpisodeLog log = synthetic_log(10);
  for (int k = 3; k < 10; ++k) close_robot(&log.records[k], 0);
  const Metrics m = compute_metrics(log, context());
  EXPECT_FALSE(m.complete);
  EXPECT_EQ(m.impact_time[0], log.records[3].t);
  EXPECT_TRUE(std::isnan(m.impact_time[1]));
  EXPECT_TRUE(std::isnan(m.impact_time_gap));
  EXPECT_TRUE(std::isnan(m.post_entry_time));
  EXPECT_TRUE(std::isnan(m.max_torque_jump_at_post_entry));
  EXPECT_FALSE(std::isnan(m.interim_torque_rate_peak));
  EXPECT_FALSE(m.success);
}

TEST(Metrics, SuccessNeedsTheHold) {
  EpisodeLog log = synthetic_log(8);
  for (int k = 2; k < 8; ++k) {
    log.records[k].phase = Phase::kPost;
    log.records[k].box_estimate.p = Vec2(0.0, 0.1 + (k < 4 ? 0.01 : 0.0005));
    log.records[k].box.p = Vec2(0.003, 0.1);
  }
  const Metrics m = compute_metrics(log, context());
  EXPECT_TRUE(m.success);
  EXPECT_EQ(m.success_time, log.records[6].t);
  EXPECT_NEAR(m.final_estimate_error, 0.0005, 1e-15);
  EXPECT_NEAR(m.final_true_error, 0.003, 1e-15);
}

TEST(Metrics, FaultRecordIsReported) {
  EpisodeLog log = synthetic_log(3);
  log.records.back().fault = true;
  EXPECT_TRUE(compute_metrics(log, context()).fault);
}

TEST(Metrics, EmptyLogGivesDefaults) {
  const Metrics m = compute_metrics(EpisodeLog{}, context());
  EXPECT_FALSE(m.complete);
  EXPECT_TRUE(std::isnan(m.peak_torque));
}

// ---------------------------------------------------------------------------

TEST(Scenarios, SuiteHasOneRowPerVariantPlusSyncAblation) {
  const Config c = default_config();
  const auto s = suite_scenarios(c);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s[0].name, "proposed");
  EXPECT_EQ(s[1].name, "no-impact-map");
  EXPECT_EQ(s[2].name, "no-interim");
  EXPECT_EQ(s[3].name, "proposed-no-sync");
  EXPECT_EQ(s[3].variant, Variant::kProposed);
  ASSERT_TRUE(s[3].sync_weight.has_value());
  EXPECT_EQ(*s[3].sync_weight, 0.0);
  for (const auto& x : s) {
    EXPECT_EQ(x.perturb_angle, c.sim.perturb_angle);
    EXPECT_EQ(x.mode, SimMode::kFlexible);
  }
}

TEST(Scenarios, ApplyScenarioOverridesTheConfig) {
  Scenario s = scenario_from_config(default_config());
  s.variant = Variant::kNoInterim;
  s.mode = SimMode::kRigid;
  s.perturb_y = -0.01;
  s.sync_weight = 0.5;
  const Config c = apply_scenario(default_config(), s);
  EXPECT_EQ(c.scenario.variant, Variant::kNoInterim);
  EXPECT_EQ(c.sim.mode, SimMode::kRigid);
  EXPECT_EQ(c.sim.perturb_y, -0.01);
  EXPECT_EQ(c.gains.w_a_s, 0.5);
  s.sync_weight.reset();
  EXPECT_EQ(apply_scenario(default_config(), s).gains.w_a_s, default_config().gains.w_a_s);
}

// ---------------------------------------------------------------------------
// One suite of the three controller variants, shared by the tests below.

struct SuiteRun {
  fs::path dir;
  Config config;
  SuiteResult result;
};

const SuiteRun& suite_run() {
  static const SuiteRun run = [] {
    SuiteRun r;
    r.dir = fs::current_path() / "harness_test_suite";
    fs::remove_all(r.dir);
    r.config = default_config();
    r.config.suite.sync_ablation = false;
    r.result = run_suite(r.config, suite_scenarios(r.config), nullptr, r.dir.string());
    return r;
  }();
  return run;
}

TEST(Suite, ThreeVariantsGiveThreeRows) {
  const SuiteRun& run = suite_run();
  ASSERT_EQ(run.result.rows.size(), 3u);
  EXPECT_FALSE(run.result.any_fault);
  for (const auto& row : run.result.rows) {
    EXPECT_TRUE(row.metrics.complete) << row.scenario.name;
    EXPECT_TRUE(row.fault_message.empty()) << row.fault_message;
    EXPECT_TRUE(fs::exists(run.dir / (row.scenario.name + ".csv")));
  }
  for (const char* f : {"metrics.csv", "summary.txt", "config.ini", "model.txt"}) {
    EXPECT_TRUE(fs::exists(run.dir / f)) << f;
  }
}

TEST(Suite, MetricsRecomputedFromTheCsvLogsMatchExactly) {
  const SuiteRun& run = suite_run();
  std::vector<SuiteRow> rows;
  for (const auto& row : run.result.rows) {
    std::ifstream is(run.dir / (row.scenario.name + ".csv"));
    const EpisodeLog log = read_log_csv(is);
    const Config c = apply_scenario(run.config, row.scenario);
    rows.push_back({row.scenario, compute_metrics(log, metrics_context(c)), {}});
  }
  std::ostringstream metrics;
  write_metrics_csv(metrics, rows);
  EXPECT_EQ(metrics.str(), read_file(run.dir / "metrics.csv"));
  std::ostringstream summary;
  write_summary(summary, rows);
  EXPECT_EQ(summary.str(), read_file(run.dir / "summary.txt"));
}

TEST(Suite, ResolvedConfigReloadsToTheSameSettings) {
  const SuiteRun& run = suite_run();
  const Config back = load_config((run.dir / "config.ini").string());
  std::ostringstream a;
  std::ostringstream b;
  write_config(a, run.config);
  write_config(b, back);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Suite, SummaryColumnsAreAligned) {
  const std::string text = read_file(suite_run().dir / "summary.txt");
  std::istringstream is(text);
  std::string line;
  size_t width = 0;
  int lines = 0;
  while (std::getline(is, line)) {
    if (width == 0) width = line.size();
    EXPECT_EQ(line.size(), width) << line;
    ++lines;
  }
  EXPECT_EQ(lines, 4);
}

TEST(Plots, SvgFilesAreWellFormedXml) {
  const SuiteRun& run = suite_run();
  int count = 0;
  for (const auto& entry : fs::directory_iterator(run.dir)) {
    if (entry.path().extension() != ".svg") continue;
    std::string why;
    EXPECT_TRUE(well_formed_xml(read_file(entry.path()), &why))
        << entry.path().filename() << ": " << why;
    ++count;
  }
  EXPECT_EQ(count, 9);
}

TEST(Plots, CheckerRejectsBrokenXml) {
  std::string why;
  EXPECT_TRUE(well_formed_xml("<svg a=\"1\"><g><line/></g></svg>", &why)) << why;
  EXPECT_FALSE(well_formed_xml("<svg><g></svg></g>", &why));
  EXPECT_FALSE(well_formed_xml("<svg><text>a & b</text></svg>", &why));
  EXPECT_FALSE(well_formed_xml("<svg a=1></svg>", &why));
  EXPECT_FALSE(well_formed_xml("<svg>", &why));
  EXPECT_FALSE(well_formed_xml("<a/><b/>", &why));
}

TEST(Plots, LabelsWithMarkupCharactersAreEscaped) {
  Figure f;
  f.name = "a<b & c";
  f.y_label = "N<m>";
  f.series = {"x&y"};
  f.t = {0.0, 1.0};
  f.phase = {Phase::kAnte, Phase::kPost};
  f.values = {{0.0, 1.0}};
  f.boundaries = {{1.0, Phase::kPost}};
  std::ostringstream os;
  write_figure_svg(os, f);
  std::string why;
  EXPECT_TRUE(well_formed_xml(os.str(), &why)) << why;
}

TEST(Plots, DegenerateFiguresStillRender) {
  Figure f;
  f.name = "flat";
  f.series = {"c"};
  f.t = {0.5};
  f.phase = {Phase::kAnte};
  f.values = {{2.0}};
  std::ostringstream os;
  write_figure_svg(os, f);
  std::string why;
  EXPECT_TRUE(well_formed_xml(os.str(), &why)) << why;
  EXPECT_EQ(os.str().find("nan"), std::string::npos);
  EXPECT_EQ(os.str().find("inf"), std::string::npos);
}

TEST(Plots, PhaseBoundariesMatchTheLog) {
  const SuiteRun& run = suite_run();
  std::ifstream is(run.dir / "proposed.csv");
  const EpisodeLog log = read_log_csv(is);
  std::vector<std::pair<double, Phase>> expected;
  for (size_t k = 1; k < log.records.size(); ++k) {
    if (log.records[k].phase != log.records[k - 1].phase) {
      expected.emplace_back(log.records[k].t, log.records[k].phase);
    }
  }
  const auto b = phase_boundaries(log);
  ASSERT_EQ(b.size(), expected.size());
  ASSERT_EQ(b.size(), 2u);
  for (size_t k = 0; k < b.size(); ++k) {
    EXPECT_EQ(b[k].t, expected[k].first);
    EXPECT_EQ(b[k].phase, expected[k].second);
  }
  for (const Figure& f : episode_figures(log)) {
    ASSERT_EQ(f.boundaries.size(), b.size());
    for (size_t k = 0; k < b.size(); ++k) EXPECT_EQ(f.boundaries[k].t, b[k].t);
  }
  // The SVG marks both transitions.
  const std::string svg = read_file(run.dir / "proposed_torques.svg");
  EXPECT_NE(svg.find(">interim<"), std::string::npos);
  EXPECT_NE(svg.find(">post<"), std::string::npos);
}

TEST(Plots, VelocityFigureHasMeasuredAndReferenceTraces) {
  const SuiteRun& run = suite_run();
  std::ifstream is(run.dir / "proposed.csv");
  const EpisodeLog log = read_log_csv(is);
  const auto figures = episode_figures(log);
  ASSERT_EQ(figures.size(), 3u);
  const Figure& v = figures[0];
  EXPECT_EQ(v.name, "velocity");
  for (const char* s : {"ee1_vx", "ee1_vy", "ee1_vx_ref", "ee1_vy_ref", "ee2_vx",
                        "ee2_vy", "ee2_vx_ref", "ee2_vy_ref"}) {
    EXPECT_NE(std::find(v.series.begin(), v.series.end(), s), v.series.end()) << s;
  }
  const size_t k = log.records.size() / 2;
  EXPECT_EQ(v.values[0][k], log.records[k].ee_v[0].x());
  EXPECT_EQ(v.values[6][k], log.records[k].ee_v_ref[1].x());
  // The CSV figure file has t, phase and one column per series.
  std::ifstream csv(run.dir / "proposed_velocity.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header,
            "t,phase,ee1_vx,ee1_vy,ee1_vx_ref,ee1_vy_ref,ee2_vx,ee2_vy,ee2_vx_ref,ee2_vy_ref");
  size_t rows = 0;
  std::string line;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, log.records.size());
}

TEST(Plots, ContactAndTorqueFiguresCoverEveryChannel) {
  const SuiteRun& run = suite_run();
  std::ifstream is(run.dir / "no-interim.csv");
  const auto figures = episode_figures(read_log_csv(is));
  EXPECT_EQ(figures[1].name, "contact_forces");
  EXPECT_EQ(figures[1].series.size(), 8u);
  EXPECT_EQ(figures[2].name, "torques");
  EXPECT_EQ(figures[2].series.size(), 6u);
}

}  // namespace
}  // namespace dualgrasp
