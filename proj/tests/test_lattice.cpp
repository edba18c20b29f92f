#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nflab/lattice.hpp>
#include <nflab/rng.hpp>

#include <set>

using namespace nflab;

TEST_CASE("mode index radii and conjugation") {
  const ModeIndex m = mode(3, +1);
  CHECK(m.radius2() == 9);
  CHECK(m.radius() == doctest::Approx(3.0));
  CHECK(m.angle_bracket(2.0) == doctest::Approx(3.0));
  CHECK(mode(1, +1).angle_bracket(2.0) == doctest::Approx(2.0));  // floor kicks in
  CHECK(m.conjugate() == mode(3, -1));
  CHECK(m.conjugate().conjugate() == m);

  const ModeIndex p = mode2(2, 1, -1);
  CHECK(p.radius2() == 5);
  CHECK(p.conjugate().j == p.j);
}

TEST_CASE("multi-index canonical form is construction-order independent") {
  const MultiIndex a{mode(3, +1), mode(1, -1), mode(1, -1)};
  const MultiIndex b{mode(1, -1), mode(3, +1), mode(1, -1)};
  CHECK(a == b);
  CHECK(MultiIndexHash{}(a) == MultiIndexHash{}(b));
  CHECK(a.degree() == 3);
  // canonical order: by |j|^2, then j, then sigma
  CHECK(a.entries[0] == mode(1, -1));
  CHECK(a.entries[1] == mode(1, -1));
  CHECK(a.entries[2] == mode(3, +1));
}

TEST_CASE("momentum is the signed sum of sites") {
  const MultiIndex a{mode(3, +1), mode(1, -1), mode(1, -1)};
  CHECK(a.momentum() == JVec{1, 0, 0});  // 3 - 1 - 1
  CHECK_FALSE(a.momentum_zero());

  const MultiIndex b{mode(2, +1), mode(1, -1), mode(1, -1)};
  CHECK(b.momentum_zero());

  const MultiIndex c{mode2(1, 2, +1), mode2(1, 2, -1)};
  CHECK(c.momentum_zero());

  // conjugation negates momentum
  CHECK(a.conjugate().momentum() == JVec{-1, 0, 0});
}

TEST_CASE("high counts against a cutoff radius") {
  const MultiIndex m{mode(1, +1), mode(3, -1), mode(4, +1)};
  CHECK(m.high_count(2.0) == 2);
  CHECK(m.high_count(3.0) == 1);   // |j| > N is strict
  CHECK(m.high_count(4.0) == 0);
  const auto sp = split_modes(m, 2.0);
  CHECK(sp.low == MultiIndex{mode(1, +1)});
  CHECK(sp.high == MultiIndex{mode(3, -1), mode(4, +1)});
}

TEST_CASE("pairing requires matched sign multiplicities per site") {
  CHECK(MultiIndex{mode(1, +1), mode(1, -1)}.is_paired());
  CHECK(MultiIndex{mode(1, +1), mode(1, +1), mode(1, -1), mode(1, -1)}.is_paired());
  CHECK(MultiIndex{mode(1, +1), mode(1, -1), mode(5, +1), mode(5, -1)}.is_paired());
  CHECK_FALSE(MultiIndex{mode(1, +1), mode(2, -1)}.is_paired());
  CHECK_FALSE(MultiIndex{mode(1, +1), mode(1, -1), mode(2, +1)}.is_paired());
  // momentum zero does not imply paired
  const MultiIndex m{mode(2, +1), mode(1, -1), mode(1, -1)};
  CHECK(m.momentum_zero());
  CHECK_FALSE(m.is_paired());
}

TEST_CASE("multiplicity, removal, merge") {
  const MultiIndex m{mode(1, -1), mode(1, -1), mode(3, +1)};
  CHECK(m.multiplicity(mode(1, -1)) == 2);
  CHECK(m.multiplicity(mode(3, +1)) == 1);
  CHECK(m.multiplicity(mode(2, +1)) == 0);

  const MultiIndex w = m.without(mode(1, -1));
  CHECK(w.degree() == 2);
  CHECK(w.multiplicity(mode(1, -1)) == 1);

  const MultiIndex a{mode(4, +1)};
  const MultiIndex merged = MultiIndex::merged(m, a);
  CHECK(merged.degree() == 4);
  CHECK(merged == MultiIndex{mode(1, -1), mode(1, -1), mode(3, +1), mode(4, +1)});
}

TEST_CASE("permutation counts: d! over repeated-entry factorials") {
  CHECK(MultiIndex{mode(1, +1), mode(1, +1), mode(2, -1)}.permutation_count() ==
        doctest::Approx(3.0));  // 3!/2!
  CHECK(MultiIndex{mode(1, +1), mode(1, -1)}.permutation_count() == doctest::Approx(2.0));
  CHECK(MultiIndex{mode(1, +1), mode(1, +1), mode(1, +1)}.permutation_count() ==
        doctest::Approx(1.0));
  CHECK(MultiIndex{mode(1, +1), mode(2, +1), mode(3, -1), mode(4, -1)}.permutation_count() ==
        doctest::Approx(24.0));
}

TEST_CASE("block partition shells") {
  const BlockPartition part;  // omega0_radius 2, thickness 1
  CHECK(part.block_of(mode(0, +1)) == 0);
  CHECK(part.block_of(mode(2, +1)) == 0);   // boundary belongs to the core
  CHECK(part.block_of(mode(3, +1)) == 1);
  CHECK(part.block_of(mode(4, -1)) == 2);
  CHECK(part.block_of(mode2(2, 1, +1)) == 1);  // |j| = sqrt(5) in (2, 3]
  CHECK(part.block_of(mode2(3, 3, +1)) == 3);  // |j| ~ 4.243 in (4, 5]

  const auto cuts = part.cutoffs(5.0);
  REQUIRE(cuts.size() == 4);
  CHECK(cuts[0] == doctest::Approx(2.0));
  CHECK(cuts[3] == doctest::Approx(5.0));
}

TEST_CASE("mode enumeration respects the cutoff and canonical order") {
  LatticeGeometry g1{1, 2, 2.0};
  const auto modes1 = enumerate_modes(g1);
  CHECK(modes1.size() == 10);  // 5 sites x 2 signs
  CHECK(std::is_sorted(modes1.begin(), modes1.end()));

  LatticeGeometry g2{2, 1, 2.0};
  CHECK(enumerate_sites(g2).size() == 9);
  CHECK(enumerate_modes(g2).size() == 18);

  // Euclidean ball selection
  const auto ball = modes_within_radius(g1, 2.0);
  CHECK(ball.size() == 10);
  const auto open_ball = modes_within_radius(g1, 2.0, /*strict=*/true);
  CHECK(open_ball.size() == 6);  // only |j| <= 1 survives
  for (const auto& m : open_ball) CHECK(m.radius2() < 4);
}

TEST_CASE("multiset enumeration matches the closed-form count") {
  LatticeGeometry g{1, 1, 2.0};
  const auto modes = enumerate_modes(g);  // 6 modes
  REQUIRE(modes.size() == 6);

  CHECK(multiset_count(6, 2) == doctest::Approx(21.0));   // C(7,2)
  CHECK(multiset_count(10, 3) == doctest::Approx(220.0));  // C(12,3)

  int seen = 0;
  std::set<MultiIndex> distinct;
  enumerate_multisets(modes, 2, [&](const MultiIndex& m) {
    ++seen;
    CHECK(std::is_sorted(m.entries.begin(), m.entries.end()));
    distinct.insert(m);
  });
  CHECK(seen == 21);
  CHECK(distinct.size() == 21);  // no duplicates, callback reuse notwithstanding
}

TEST_CASE("rng streams are reproducible and seed-separated") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 16; ++i) {
    const double x = a.uniform01();
    all_equal = all_equal && (x == b.uniform01());
    any_diff = any_diff || (x != c.uniform01());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK(all_equal);
  CHECK(any_diff);

  // Box-Muller spare caching must not desynchronize replay
  Rng g1(7), g2(7);
  for (int i = 0; i < 9; ++i) CHECK(g1.gaussian() == g2.gaussian());

  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(5, 9) == derive_seed(5, 9));
}
