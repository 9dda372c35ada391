#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include "catch_amalgamated.hpp"

#include "chemofront/dichotomy.hpp"

using namespace chemofront;
using Catch::Approx;

namespace {

// Synthetic trajectory with constant probe values after t = 1.
std::vector<DiagnosticSample> synthetic(double h_end, double u, double v, double hprime, const ModelParams& p) {
  std::vector<DiagnosticSample> s;
  for (int i = 0; i <= 100; ++i) {
    DiagnosticSample d;
    d.t = i;
    d.h = 1.0 + (h_end - 1.0) * i / 100.0;
    d.hprime = i == 0 ? 1.0 : hprime;
    d.sup_u = d.min_u_probe = d.max_u_probe = u;
    d.sup_v = d.min_v_probe = d.max_v_probe = v;
    d.min_w_probe = d.max_w_probe = (p.k * u + p.l * v) / p.lambda;
    d.min_density_probe = p.k * u + p.l * v;
    s.push_back(d);
  }
  return s;
}

RunSpec quick_spec() {
  RunSpec spec;
  spec.scheme.grid_n = 128;
  spec.scheme.dt = 2e-3;
  spec.rule.T_max = 60.0;
  spec.rule.H_max = 12.0;
  spec.init.h0 = 3.0;
  return spec;
}

}  // namespace

TEST_CASE("classification rules on synthetic trajectories") {
  ModelParams p;
  ClassificationRule rule;
  CHECK(classify(synthetic(1.2, 1e-5, 1e-5, 1e-6, p), p, rule).outcome == Outcome::vanishing);
  CHECK(classify(synthetic(50, 2.0 / 3, 2.0 / 3, 0.4, p), p, rule).outcome == Outcome::spreading_coexist);
  CHECK(classify(synthetic(50, 1.0, 1e-4, 0.4, p), p, rule).outcome == Outcome::spreading_u_wins);
  CHECK(classify(synthetic(50, 1e-4, 1.0, 0.4, p), p, rule).outcome == Outcome::spreading_v_wins);
  CHECK(classify(synthetic(50, 0.4, 0.4, 0.4, p), p, rule).outcome == Outcome::spreading_generalized);
  CHECK(classify(synthetic(50, 1e-3, 1e-3, 0.4, p), p, rule).outcome == Outcome::indeterminate);
  CHECK(classify(synthetic(10, 0.5, 0.5, 0.1, p), p, rule).outcome == Outcome::indeterminate);
  const auto failed = classify(synthetic(50, 2.0 / 3, 2.0 / 3, 0.4, p), p, rule, std::string("boom"));
  CHECK(failed.outcome == Outcome::indeterminate);
  CHECK_THAT(failed.note, Catch::Matchers::ContainsSubstring("boom"));

  SECTION("vanishing records check the front against l*") {
    const auto c = classify(synthetic(1.2, 1e-5, 1e-5, 1e-6, p), p, rule);
    CHECK(evidence_value(c.evidence, "vanishing_front_consistent") == 1.0);
    CHECK(evidence_value(c.evidence, "lstar") == Approx(std::numbers::pi / 2));
    const auto bad = classify(synthetic(3.0, 1e-5, 1e-5, 1e-6, p), p, rule);
    CHECK(bad.outcome == Outcome::vanishing);
    CHECK(evidence_value(bad.evidence, "vanishing_front_consistent") == 0.0);
  }
  SECTION("invalid rule") {
    ClassificationRule r;
    r.tail_frac = 0.7;
    CHECK_THROWS_AS(classify(synthetic(1, 0, 0, 0, p), p, r), InputError);
  }
}

TEST_CASE("outcomes are mutually exclusive over random synthetic data") {
  ModelParams p;
  ClassificationRule rule;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> val(0.0, 1.2), h(1.0, 60.0), hp(0.0, 1e-3);
  for (int i = 0; i < 500; ++i) {
    const auto s = synthetic(h(rng), val(rng) * val(rng) * val(rng), val(rng) * val(rng), hp(rng), p);
    const auto c = classify(s, p, rule);
    const bool van = c.outcome == Outcome::vanishing;
    CHECK_FALSE((van && is_spreading(c.outcome)));
  }
}

TEST_CASE("simulated outcomes") {
  SECTION("weak competition spreads with coexistence") {
    const auto rec = run_and_classify(quick_spec());
    CHECK(rec.outcome == Outcome::spreading_coexist);
    CHECK(rec.stop_reason == "h_max");
    const auto rep = verify_limit_profile(rec, LimitTarget::coexist);
    CHECK(rep.sufficient);
    CHECK(rep.w_target == Approx(4.0 / 3.0));
    CHECK(rep.within(1e-2));
  }
  SECTION("weak-strong competition: u wins") {
    auto spec = quick_spec();
    spec.params.b = 1.5;
    const auto rec = run_and_classify(spec);
    CHECK(rec.outcome == Outcome::spreading_u_wins);
    const auto rep = verify_limit_profile(rec, LimitTarget::u_wins);
    CHECK(rep.w_target == Approx(spec.params.k / spec.params.lambda));
    CHECK(rep.within(1e-2));
  }
  SECTION("strong-weak competition: v wins") {
    auto spec = quick_spec();
    spec.params.a = 1.5;
    const auto rec = run_and_classify(spec);
    CHECK(rec.outcome == Outcome::spreading_v_wins);
    CHECK(verify_limit_profile(rec, LimitTarget::v_wins).w_target == Approx(spec.params.l / spec.params.lambda));
  }
  SECTION("small slow front vanishes below l*") {
    auto spec = quick_spec();
    spec.init.h0 = 0.2;
    spec.params.mu1 = spec.params.mu2 = 0.05;
    spec.rule.T_max = 200.0;
    const auto rec = run_and_classify(spec);
    CHECK(rec.outcome == Outcome::vanishing);
    CHECK(rec.stop_reason == "vanishing");
    CHECK(evidence_value(rec.evidence, "h_final") <= std::numbers::pi / 2 + 0.05);
    const auto rep = verify_limit_profile(rec, LimitTarget::coexist);
    CHECK_FALSE(rep.sufficient);
  }
}

TEST_CASE("limit profile targets and missing data") {
  RunRecord rec;
  rec.spec.params.chi1 = rec.spec.params.chi2 = 0.0;
  rec.spec.params.k = 2.0;
  rec.spec.params.l = 3.0;
  rec.spec.params.lambda = 4.0;
  rec.outcome = Outcome::spreading_coexist;
  rec.evidence = {{"tail_start", 0.0}};
  const auto rep = verify_limit_profile(rec, LimitTarget::coexist);
  CHECK(rep.w_target == Approx((2.0 + 3.0) * (2.0 / 3.0) / 4.0));
  CHECK_FALSE(rep.sufficient);
  CHECK_THAT(rep.message, Catch::Matchers::ContainsSubstring("insufficient data"));
  CHECK(verify_limit_profile(rec, LimitTarget::u_wins).w_target == Approx(0.5));
  CHECK(verify_limit_profile(rec, LimitTarget::v_wins).w_target == Approx(0.75));
  rec.spec.params.b = 1.5;
  CHECK_THROWS_AS(verify_limit_profile(rec, LimitTarget::coexist), InputError);
}

TEST_CASE("records: json round trip, determinism, monotone front") {
  auto spec = quick_spec();
  spec.rule.T_max = 10.0;
  const auto rec = run_and_classify(spec);
  const auto text = record_json_text(rec);
  const auto back = record_from_json(nlohmann::ordered_json::parse(text));
  CHECK(record_json_text(back) == text);
  std::ostringstream a, b;
  summarize(rec, a);
  summarize(back, b);
  CHECK(a.str() == b.str());
  CHECK(record_json_text(run_and_classify(spec)) == text);
  for (std::size_t i = 1; i < rec.diagnostics.size(); ++i) CHECK(rec.diagnostics[i].h >= rec.diagnostics[i - 1].h);
  CHECK(evidence_value(rec.evidence, "h_nondecreasing") == 1.0);

  const auto dir = std::filesystem::temp_directory_path() / "chemofront_test_records";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "r.json", text);
  CHECK_FALSE(std::filesystem::exists(dir / "r.json.tmp"));
  CHECK(record_json_text(load_record(dir / "r.json")) == text);
  std::filesystem::remove_all(dir);
}

TEST_CASE("sweeps") {
  auto base = quick_spec();
  base.rule.T_max = 8.0;
  SECTION("singleton grid equals a direct run") {
    const auto pts = sweep(base, {{"mu", {1.0}}}, 1);
    REQUIRE(pts.size() == 1);
    REQUIRE(pts[0].record);
    CHECK(record_json_text(*pts[0].record) == record_json_text(run_and_classify(base)));
  }
  SECTION("parallel workers give the same records, failures are recorded") {
    const std::vector<SweepAxis> axes{{"h0", {1.0, 2.0}}, {"chi1", {0.05, 2.0}}};
    const auto serial = sweep(base, axes, 1);
    const auto parallel = sweep(base, axes, 3);
    REQUIRE(serial.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(serial[i].coords == parallel[i].coords);
      CHECK(serial[i].error == parallel[i].error);
      if (serial[i].record) CHECK(record_json_text(*serial[i].record) == record_json_text(*parallel[i].record));
    }
    CHECK_FALSE(serial[1].record);  // chi1 = 2 violates (H1)
    CHECK_THAT(serial[1].error, Catch::Matchers::ContainsSubstring("H1"));
    std::ostringstream csv;
    write_sweep_summary_csv(csv, axes, serial);
    CHECK(csv.str().rfind("index,h0,chi1,outcome", 0) == 0);
  }
  SECTION("unknown axis") { CHECK_THROWS_AS(sweep(base, {{"nope", {1.0}}}, 1), InputError); }
}

TEST_CASE("monotonicity advisories") {
  std::vector<SweepAxis> axes{{"mu", {0.1, 0.2, 0.3}}};
  std::vector<SweepPoint> pts(3);
  const Outcome seq[] = {Outcome::vanishing, Outcome::spreading_coexist, Outcome::vanishing};
  for (std::size_t i = 0; i < 3; ++i) {
    pts[i].index = i;
    pts[i].coords = {axes[0].values[i]};
    pts[i].record = RunRecord{};
    pts[i].record->outcome = seq[i];
  }
  const auto notes = monotonicity_advisories(axes, pts);
  REQUIRE(notes.size() == 1);
  CHECK_THAT(notes[0], Catch::Matchers::ContainsSubstring("point 2"));
  pts[2].record->outcome = Outcome::spreading_u_wins;
  CHECK(monotonicity_advisories(axes, pts).empty());
}
