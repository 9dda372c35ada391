#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"

#include "chemofront/model_params.hpp"

using namespace chemofront;
using Catch::Approx;

namespace {

ModelParams base(double chi1, double chi2, double a, double b) {
  ModelParams p;
  p.chi1 = chi1;
  p.chi2 = chi2;
  p.a = a;
  p.b = b;
  return p;
}

double slack(const std::vector<Slack>& s, const std::string& name) {
  for (const auto& x : s)
    if (x.name == name) return x.value;
  FAIL("missing slack " << name);
  return 0.0;
}

// Draws parameters across the hypothesis boundaries.
ModelParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.1, 2.5), chi(0.0, 0.6);
  ModelParams p;
  p.a = pos(rng);
  p.b = pos(rng);
  p.r = pos(rng);
  p.d = pos(rng);
  p.chi1 = chi(rng);
  p.chi2 = chi(rng);
  p.k = pos(rng);
  p.l = pos(rng);
  p.lambda = pos(rng);
  return p;
}

}  // namespace

TEST_CASE("H1 slacks") {
  SECTION("no chemotaxis") {
    const auto f = check_h1(base(0, 0, 0.5, 0.5));
    CHECK(f.holds);
    for (const auto& s : f.slacks) CHECK(s.value > 0.0);
  }
  SECTION("direct evaluation") {
    ModelParams p = base(0.2, 0.1, 0.5, 1.0);
    p.k = 2;
    p.l = 1;
    p.r = 1;
    const auto f = check_h1(p);
    REQUIRE(f.slacks.size() == 4);
    const double expected[] = {1 - 2 * 0.2, 0.5 - 1 * 0.2, 1 * 1 - 2 * 0.1, 1 - 1 * 0.1};
    for (int i = 0; i < 4; ++i) CHECK(f.slacks[i].value == Approx(expected[i]).epsilon(1e-14));
    CHECK(f.slacks[0].value == Approx(0.6));
    CHECK(f.holds);
  }
  SECTION("violated") {
    ModelParams p = base(1.0, 0.0, 0.5, 0.5);
    p.k = 2;
    const auto f = check_h1(p);
    CHECK(f.slacks[0].value == Approx(-1.0));
    CHECK_FALSE(f.holds);
  }
}

TEST_CASE("equilibrium constants") {
  auto e = equilibrium_constants(base(0, 0, 0.5, 0.5));
  CHECK(e.A1bar == 1.0);
  CHECK(e.A2bar == 1.0);
  ModelParams p = base(0.1, 0.0, 0.5, 0.5);
  CHECK(equilibrium_constants(p).A1bar == Approx(1.0 / 0.9).epsilon(1e-14));
  p = base(0.0, 0.5, 0.5, 0.5);
  p.r = 2;
  CHECK(equilibrium_constants(p).A2bar == Approx(2.0 / 1.5).epsilon(1e-14));
  p = base(1.0, 0.0, 0.5, 0.5);
  CHECK_THROWS_AS(equilibrium_constants(p), InputError);

  SECTION("A1bar is strictly increasing in chi1") {
    double prev = 0.0;
    for (double chi = 0.0; chi < 0.95; chi += 0.05) {
      const double a1 = equilibrium_constants(base(chi, 0, 5, 5)).A1bar;
      CHECK(a1 > prev);
      prev = a1;
    }
  }
}

TEST_CASE("H2, H3, H4 on competition regimes without chemotaxis") {
  const auto ww = check_hypotheses(base(0, 0, 0.5, 0.5));
  CHECK(ww.h1);
  CHECK(ww.h2);
  const auto ws = check_hypotheses(base(0, 0, 0.5, 1.5));
  CHECK(ws.h3);
  CHECK_FALSE(ws.h2);
  CHECK_FALSE(ws.h4);
  const auto sw = check_hypotheses(base(0, 0, 1.5, 0.5));
  CHECK(sw.h4);
  CHECK_FALSE(sw.h2);
  CHECK_FALSE(sw.h3);

  SECTION("weak versus strict boundary convention") {
    const auto edge = check_hypotheses(base(0, 0, 0.5, 1.0));
    CHECK(edge.h3);
    CHECK_FALSE(edge.h3_strict);
    CHECK(slack(edge.margins, "b_minus_one") == 0.0);
  }
  SECTION("chi bound with the square root") {
    ModelParams p = base(0.05, 0.05, 0.5, 0.5);
    const auto e = equilibrium_constants(p);
    const double inner = 1 - p.a * e.A2bar - p.chi1 * p.k * e.A1bar;
    const double bound = 4 * std::sqrt(p.lambda) * std::sqrt(inner) / (e.A1bar * p.k + e.A2bar * p.l);
    CHECK(slack(check_h2(p).slacks, "chi1_bound") == Approx(bound - p.chi1).epsilon(1e-14));
  }
}

TEST_CASE("hypothesis properties over random parameters") {
  std::mt19937_64 rng(20240601);
  int h2_count = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto p = random_params(rng);
    const auto rep = check_hypotheses(p);
    if (rep.h2) CHECK(rep.h1);
    if (rep.h3) CHECK(rep.h1);
    if (rep.h4) CHECK(rep.h1);
    if (rep.h3_strict) CHECK(rep.h3);
    h2_count += rep.h2;
    ModelParams q = p;
    q.chi1 = q.chi2 = 0.0;
    const auto r0 = check_hypotheses(q);
    CHECK(r0.h1);
    CHECK(r0.h2 == (q.a < 1.0 && q.b < 1.0));
  }
  CHECK(h2_count > 0);
}

TEST_CASE("coexistence equilibrium") {
  auto eq = coexistence_equilibrium(0.5, 0.5);
  REQUIRE(eq);
  CHECK(eq->u == Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(eq->v == Approx(2.0 / 3.0).epsilon(1e-15));
  eq = coexistence_equilibrium(0.0, 0.0);
  REQUIRE(eq);
  CHECK(eq->u == 1.0);
  CHECK(eq->v == 1.0);
  CHECK_FALSE(coexistence_equilibrium(0.5, 1.5));
  CHECK_THROWS_AS(coexistence_equilibrium(2.0, 0.5), InputError);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> c(0.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = c(rng), b = c(rng);
    if (std::abs(a * b - 1.0) < 1e-3) continue;
    if (const auto e = coexistence_equilibrium(a, b)) {
      CHECK(std::abs(e->u + a * e->v - 1.0) < 1e-12);
      CHECK(std::abs(b * e->u + e->v - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("initial profiles") {
  SECTION("cosine endpoints") {
    const auto init = make_initial_profile(ProfileFamily::cosine, 1.0, 1.0, 64);
    CHECK(init.u0.front() == 1.0);
    CHECK(init.u0.back() == 0.0);
    CHECK(init.v0.back() == 0.0);
  }
  SECTION("derivative at the origin below tolerance for any amplitude") {
    for (double amp : {0.01, 0.5, 3.0, 100.0}) {
      const auto init = make_initial_profile(ProfileFamily::cosine, amp, 2.0, 128);
      const double dx = init.dx();
      const auto& f = init.u0;
      CHECK(std::abs(-3 * f[0] + 4 * f[1] - f[2]) / (2 * dx) <= 10 * dx * dx);
    }
  }
  SECTION("rejections") {
    CHECK_THROWS_AS(make_initial_profile([](double) { return 0.1; }, [](double x) { return 1 - x; }, 1.0, 32),
                    InputError);
    CHECK_THROWS_AS(make_initial_profile(ProfileFamily::cosine, 0.0, 1.0, 64), InputError);
    CHECK_THROWS_AS(make_initial_profile(ProfileFamily::cosine, 1.0, 1.0, 8), InputError);
    // slope at the origin
    CHECK_THROWS_AS(make_initial_profile([](double x) { return 1 - x; }, [](double x) { return 1 - x; }, 1.0, 32),
                    InputError);
  }
  SECTION("user profile") {
    const auto init = make_initial_profile([](double x) { return 1 - x * x; }, [](double x) { return 2 * (1 - x * x); },
                                           1.0, 32);
    CHECK(init.v0[0] == 2.0);
  }
}

TEST_CASE("parameter validation and json") {
  ModelParams p;
  CHECK_NOTHROW(p.validate());
  p.chi1 = 0.0;
  CHECK_NOTHROW(p.validate());
  p.lambda = 0.0;
  CHECK_THROWS_WITH(p.validate(), Catch::Matchers::ContainsSubstring("lambda"));
  ModelParams q;
  q.mu2 = 0.25;
  nlohmann::ordered_json j = q;
  CHECK(j.get<ModelParams>().mu2 == 0.25);
}
