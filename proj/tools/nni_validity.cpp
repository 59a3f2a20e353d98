// nni-validity: when does the nearest-neighbor truncation reproduce the full
// power-law dynamics of an open XX chain? Subcommands expose each stage:
// amplitude evolution, discrepancy functionals, critical-exponent scans and
// the logarithmic fit of alpha_c(N).

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include <nniv/cli.hpp>
#include <nniv/version.hpp>

int main(int argc, char** argv) {
  CLI::App app{"NNI validity analysis for open XX chains with power-law couplings"};
  app.set_version_flag("--version", std::string("nni-validity ") + nniv::tool_version());
  app.require_subcommand(1);

  nniv::EvolveConfig ev;
  auto* evolve = app.add_subcommand("evolve", "Emit transition amplitudes over a tau grid");
  evolve->add_option("--n", ev.n, "chain length")->required();
  evolve->add_option("--alpha", ev.alpha, "coupling exponent");
  evolve->add_option("--model", ev.model, "nni, ani or m=K (default ani)");
  evolve->add_option("--pair", ev.pair, "source,target sites, e.g. 1,5");
  evolve->add_option("--initial-state", ev.state_file, "file with one 're im' row per site");
  evolve->add_option("--site", ev.site, "observed site in --initial-state mode");
  evolve->add_option("--t-max", ev.t_max, "time horizon")->required();
  evolve->add_option("--dtau", ev.dtau, "tau grid step (default 0.05)");
  evolve->add_flag("--both-models", ev.both_models, "emit nni and ani columns side by side");
  evolve->add_option("-o,--output", ev.output, "output file (default stdout)");

  nniv::DeltajConfig dj;
  auto* deltaj = app.add_subcommand("deltaj", "Discrepancy Delta J over an N grid");
  deltaj->add_option("--n-range", dj.n_range, "N grid, start:stop:step")->required();
  deltaj->add_option("--alpha", dj.alpha, "coupling exponent");
  deltaj->add_option("--target", dj.target, "p1n or full");
  deltaj->add_option("--t-factor", dj.t_factor, "horizon = factor * N (default per target)");
  deltaj->add_option("--dtau", dj.dtau, "tau grid step");
  deltaj->add_option("-o,--output", dj.output, "output file (default stdout)");

  nniv::AlphacConfig ac;
  auto* alphac = app.add_subcommand("alphac", "Critical exponent sweep over N");
  alphac->add_option("--n-range", ac.n_range, "N grid, start:stop:step")->required();
  alphac->add_option("--target", ac.target, "p1n or full")->required();
  alphac->add_option("--epsilon", ac.epsilon, "criterion threshold (default 0.01)");
  alphac->add_option("--dalpha", ac.dalpha, "alpha scan resolution (default 0.01)");
  alphac->add_option("--dtau", ac.dtau, "tau grid step");
  alphac->add_flag("--fit", ac.fit, "append the a ln(N-b)+c fit as a comment row");
  alphac->add_option("--cache-dir", ac.cache_dir, "results cache directory");
  alphac->add_option("-o,--output", ac.output, "output file (default stdout)");

  nniv::AlphacVsTConfig at;
  auto* alphac_t = app.add_subcommand("alphac-vs-t", "Critical exponent vs horizon at fixed N");
  alphac_t->add_option("--n", at.n, "chain length")->required();
  alphac_t->add_option("--t-range", at.t_range, "horizon grid, start:stop:step")->required();
  alphac_t->add_option("--target", at.target, "p1n or full")->required();
  alphac_t->add_option("--epsilon", at.epsilon, "criterion threshold");
  alphac_t->add_option("--dalpha", at.dalpha, "alpha scan resolution");
  alphac_t->add_option("--dtau", at.dtau, "tau grid step");
  alphac_t->add_option("--cache-dir", at.cache_dir, "results cache directory");
  alphac_t->add_option("-o,--output", at.output, "output file (default stdout)");

  nniv::ArgmaxMapConfig am;
  auto* argmax = app.add_subcommand("argmax-map", "Worst pair at the transition, per N");
  argmax->add_option("--n-range", am.n_range, "N grid, start:stop:step")->required();
  argmax->add_option("--epsilon", am.epsilon, "criterion threshold");
  argmax->add_option("--dalpha", am.dalpha, "alpha scan resolution");
  argmax->add_option("--dtau", am.dtau, "tau grid step");
  argmax->add_option("--cache-dir", am.cache_dir, "results cache directory");
  argmax->add_option("-o,--output", am.output, "output file (default stdout)");

  nniv::AVsNmaxConfig an;
  auto* avn = app.add_subcommand("a-vs-nmax", "Fitted slope a as a function of N_max");
  avn->add_option("--input", an.input, "alphac sweep CSV to refit");
  avn->add_option("--n-range", an.n_range, "N grid to (re)compute when no --input");
  avn->add_option("--target", an.target, "p1n or full (recompute mode)");
  avn->add_option("--nmax-range", an.nmax_range, "N_max grid, start:stop:step");
  avn->add_option("--epsilon", an.epsilon, "criterion threshold");
  avn->add_option("--dalpha", an.dalpha, "alpha scan resolution");
  avn->add_option("--dtau", an.dtau, "tau grid step");
  avn->add_option("--cache-dir", an.cache_dir, "results cache directory");
  avn->add_option("-o,--output", an.output, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (evolve->parsed()) return nniv::cmd_evolve(ev);
  if (deltaj->parsed()) return nniv::cmd_deltaj(dj);
  if (alphac->parsed()) return nniv::cmd_alphac(ac);
  if (alphac_t->parsed()) return nniv::cmd_alphac_vs_t(at);
  if (argmax->parsed()) return nniv::cmd_argmax_map(am);
  if (avn->parsed()) return nniv::cmd_a_vs_nmax(an);
  return 2;
}
