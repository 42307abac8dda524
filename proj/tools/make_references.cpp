// Regenerates tests/data/references.json from the quadrature oracles.
#include <iostream>
#include <numbers>

#include <json.hpp>

#include "vjlp/jump_kernel.hpp"
#include "vjlp/oracles.hpp"

using namespace vjlp;

int main()
{
  const Preset torus = make_preset("torus1d");
  const Preset gauss = make_preset("gaussian2d");
  const auto sp = ActivationD::softplus(1.0);

  nlohmann::json j;
  j["oracle_version"] = kOracleVersion;
  j["presets"] = {{"torus1d", {{"c", torus.params.c}, {"epsilon", torus.params.epsilon}}},
                  {"gaussian2d", {{"box", gauss.params.box}}}};
  j["moments"] = {
      {"torus1d.cos2pi_x1", exact_moment(torus, make_observable("cos2pi_x1"))},
      {"torus1d.v1^2", exact_moment(torus, make_observable("v1^2"))},
      {"gaussian2d.y^2", exact_moment(gauss, make_observable("y^2"))},
      {"gaussian2d.x1^2", exact_moment(gauss, make_observable("x1^2"))},
  };
  j["rates"] = {
      {"lambda.relu.rho=-1.theta=1.v=3", lambda_exact(ActivationD::relu(), -1.0, 1.0, 3.0)},
      {"lambda.softplus1.rho=0.theta=0", lambda_exact(sp, 0.0, 0.0, 0.5)},
      {"lambda.softplus1.rho=0.5.theta=0.7.v=-0.4", lambda_exact(sp, 0.5, 0.7, -0.4)},
      {"envelope.softplus1.rho=0.M=1.v=0", envelope_rate(sp, 0.0, 1.0, 0.0).rate},
      {"envelope.relu.rho=-1.M=2.v=3", envelope_rate(ActivationD::relu(), -1.0, 2.0, 3.0).rate},
      {"rayleigh_mean", std::sqrt(std::numbers::pi / 2)},
  };
  std::cout.precision(17);
  std::cout << j.dump(2) << '\n';
}
