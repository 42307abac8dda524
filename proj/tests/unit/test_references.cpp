#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "vjlp/jump_kernel.hpp"
#include "vjlp/oracles.hpp"

using namespace vjlp;

TEST_CASE("frozen references")
{
  std::ifstream f(VJLP_TEST_DATA_DIR "/references.json");
  REQUIRE(f.good());
  const auto ref = nlohmann::json::parse(f);
  CHECK(ref["oracle_version"] == kOracleVersion);

  const Preset torus = make_preset("torus1d");
  const Preset gauss = make_preset("gaussian2d");
  const auto& m = ref["moments"];
  CHECK(exact_moment(torus, make_observable("cos2pi_x1")) ==
        doctest::Approx(m["torus1d.cos2pi_x1"].get<double>()).epsilon(1e-12));
  CHECK(m["torus1d.cos2pi_x1"].get<double>() == doctest::Approx(0.1230867093782587).epsilon(1e-13));
  CHECK(exact_moment(gauss, make_observable("y^2")) == doctest::Approx(m["gaussian2d.y^2"].get<double>()).epsilon(1e-12));
  CHECK(m["gaussian2d.y^2"].get<double>() == doctest::Approx(1.0 / 11).epsilon(1e-12));

  const auto& r = ref["rates"];
  const auto sp = ActivationD::softplus(1.0);
  CHECK(lambda_exact(sp, 0.5, 0.7, -0.4) ==
        doctest::Approx(r["lambda.softplus1.rho=0.5.theta=0.7.v=-0.4"].get<double>()).epsilon(1e-12));
  CHECK(lambda_exact(sp, 0.0, 0.0, 0.5) == doctest::Approx(r["lambda.softplus1.rho=0.theta=0"].get<double>()));
  CHECK(envelope_rate(sp, 0.0, 1.0, 0.0).rate ==
        doctest::Approx(r["envelope.softplus1.rho=0.M=1.v=0"].get<double>()).epsilon(1e-15));
  CHECK(r["envelope.relu.rho=-1.M=2.v=3"] == 6.0);
  CHECK(r["lambda.relu.rho=-1.theta=1.v=3"] == 6.0);
}
