#include <doctest.h>
#include <centra/domain.hpp>
using namespace centra;
TEST_CASE("torus wrap and displacement") {
  Vec per(2); per << 1.0, 1.0;
  DomainChart t = DomainChart::torus(per, 0.4);
  Vec p(2); p << 1.25, -0.25;
  Vec w = t.wrap(p);
  CHECK(w[0] == doctest::Approx(0.25));
  CHECK(w[1] == doctest::Approx(0.75));
  Vec a(2), b(2); a << 0.9, 0.1; b << 0.1, 0.9;
  Vec d = t.displacement(a, b);
  CHECK(d[0] == doctest::Approx(0.2));
  CHECK(d[1] == doctest::Approx(-0.2));
  CHECK(t.distance(a, b) == doctest::Approx(std::sqrt(0.08)));
}
