#include "gapforge/cli.hpp"

#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "gapforge/io.hpp"

namespace gapforge {

namespace {

constexpr int kOk = 0, kUsage = 1, kInconclusive = 2, kViolation = 3;

Tolerances cli_tolerances(double tol_psd, double tol_zero) {
  Tolerances t = tolerances_from_env();
  if (tol_psd > 0) t.psd = tol_psd;
  if (tol_zero > 0) t.zero = tol_zero;
  return t;
}

int cmd_certify(const std::string& path, bool as_json) {
  ExactInstance inst = load_instance(path);
  GapCertificate cert = certify_gap(inst);
  if (as_json) {
    std::cout << certificate_to_json(inst, cert) << "\n";
  } else {
    std::cout << "instance: " << inst.meta.name << " (m=" << inst.m << ", n=" << inst.n << ")\n";
    std::cout << "primal value: " << (cert.primal_value ? cert.primal_value->str() : "inconclusive");
    if (!cert.primal_note.empty()) std::cout << "  [" << cert.primal_note << "]";
    std::cout << "\n";
    if (cert.dual_value && cert.dual_value->is_infinite()) {
      std::cout << "dual value:   dual infeasible"
                << (cert.weakly_infeasible_dual ? " (weakly infeasible); gap = +inf" : "; gap = +inf") << "\n";
    } else {
      std::cout << "dual value:   " << (cert.dual_value ? cert.dual_value->str() : "inconclusive");
      if (!cert.dual_note.empty()) std::cout << "  [" << cert.dual_note << "]";
      std::cout << "\n";
    }
    std::cout << "elimination trace: " << cert.elimination_trace.size() << " steps\n";
    if (cert.reduced_dual) {
      std::cout << "reduced dual: sigma = [";
      for (size_t i = 0; i < cert.reduced_dual->sigma.size(); ++i)
        std::cout << (i ? ", " : "") << to_string(cert.reduced_dual->sigma[i]);
      std::cout << "], s = " << cert.reduced_dual->s
                << ", c2' = " << to_string(cert.reduced_dual->c2prime) << "\n";
    }
    if (cert.primal_value && cert.dual_value && !cert.primal_value->is_infinite() &&
        !cert.dual_value->is_infinite()) {
      std::cout << "gap: " << to_string(cert.dual_value->finite() - cert.primal_value->finite()) << "\n";
    }
  }
  return cert.conclusive() ? kOk : kInconclusive;
}

int cmd_canonicalize(const std::string& path, const Tolerances& tol, int angles, bool as_json) {
  ExactInstance inst = load_instance(path);
  CanonicalizeOptions opts;
  opts.tol = tol;
  opts.n_angles = angles;
  CanonicalizeOutcome out = canonicalize(inst, opts);
  if (as_json) {
    std::cout << canonical_outcome_to_json(out) << "\n";
  } else if (const auto* form = std::get_if<CanonicalForm>(&out)) {
    GapCertificate pref = canonical_certificate(*form);
    // float-track scalars are dyadic rationals; print them as decimals
    auto scalar = [&](const Rat& v) {
      if (form->exact_backend) return to_string(v);
      std::ostringstream s;
      s << std::setprecision(15) << to_double(v);
      return s.str();
    };
    std::cout << "canonical form (" << (form->exact_backend ? "exact" : "float") << " backend)\n";
    std::cout << "p = " << form->p << ", r = " << form->r << ", s = " << form->s << "\n";
    std::cout << "Lambda = [";
    for (size_t i = 0; i < form->lambda.size(); ++i) std::cout << (i ? ", " : "") << scalar(form->lambda[i]);
    std::cout << "]\nSigma = [";
    for (size_t i = 0; i < form->sigma.size(); ++i) std::cout << (i ? ", " : "") << scalar(form->sigma[i]);
    std::cout << "]\n";
    double mnorm = 0;
    for (int i = 0; i < form->m_block.rows(); ++i)
      for (int j = 0; j < form->m_block.cols(); ++j)
        mnorm += to_double(form->m_block(i, j)) * to_double(form->m_block(i, j));
    std::cout << "|M| = " << std::sqrt(mnorm) << ", c2' = " << scalar(form->c2prime) << "\n";
    std::cout << "residual = " << form->residual << "\n";
    const std::string dual = pref.dual_value->is_infinite() ? std::string("inf") : scalar(pref.dual_value->finite());
    std::cout << "gap: (" << pref.primal_value->str() << ", " << dual << ")\n";
  } else if (const auto* verdict = std::get_if<NoGapVerdict>(&out)) {
    std::cout << "no positive gap: " << to_string(verdict->reason) << "\n" << verdict->detail << "\n";
  } else {
    std::cout << "inconclusive: " << std::get<Inconclusive>(out).detail << "\n";
    return kInconclusive;
  }
  if (const auto* form = std::get_if<CanonicalForm>(&out); form && form->residual > tol.zero)
    return kViolation;
  return kOk;
}

int cmd_singdeg(const std::string& path, const std::string& which) {
  ExactInstance inst = load_instance(path);
  const DualKind kind = (which == "HD") ? DualKind::HomogeneousHD : DualKind::DualD;
  SingularityReport rep = singularity_degree(inst, kind);
  std::cout << "instance: " << inst.meta.name << " (m=" << inst.m << ", n=" << inst.n << ")\n";
  std::cout << "verified sequence length (upper bound): " << rep.upper_bound << "\n";
  if (rep.value)
    std::cout << "singularity degree d(" << which << ") = " << *rep.value << "  [" << rep.basis << "]\n";
  else
    std::cout << "singularity degree: upper bound only [" << rep.basis << "]\n";
  if (rep.regularized_blocks) {
    std::cout << "regularized sequence blocks: (";
    for (size_t i = 0; i < rep.regularized_blocks->size(); ++i)
      std::cout << (i ? ", " : "") << (*rep.regularized_blocks)[i];
    std::cout << ")\n";
  }
  if (rep.cone) {
    std::cout << "terminal face: zero indices {";
    for (size_t i = 0; i < rep.cone->face.zero.size(); ++i)
      std::cout << (i ? "," : "") << rep.cone->face.zero[i] + 1;
    std::cout << "}, rank " << rep.cone->face.rank() << "\n";
  }
  return rep.value ? kOk : kInconclusive;
}

int cmd_claimcheck(const std::string& path, const std::string& which, int trials, uint64_t seed) {
  ExactInstance inst = load_instance(path);
  const DualKind kind = (which == "HD") ? DualKind::HomogeneousHD : DualKind::DualD;
  ClaimCheckReport rep = claim_check(inst, kind, trials, seed);
  std::cout << rep.detail << "\n";
  std::cout << "trials: " << rep.trials << " (" << rep.indefinite_checks << " indefinite checks, "
            << rep.step_checks << " canonical step checks)\n";
  std::cout << (rep.passed ? "all trials passed\n" : "COUNTEREXAMPLE FOUND\n");
  return rep.passed ? kOk : kViolation;
}

int cmd_probe(const std::string& path, int iters) {
  ExactInstance inst = load_instance(path);
  ProbeResult res = weak_infeasibility_probe(inst, iters);
  std::cout << "instance: " << inst.meta.name << "\n";
  std::cout << "iterations: " << res.iterations << "\n";
  std::cout << "final distance to the psd cone: " << res.final_distance << "\n";
  const size_t show = std::min<size_t>(res.distances.size(), 8);
  std::cout << "distance trace (first " << show << "): ";
  for (size_t i = 0; i < show; ++i) std::cout << (i ? ", " : "") << res.distances[i];
  std::cout << "\n";
  return kOk;
}

int cmd_export(const std::string& path, const std::string& format, const std::string& out) {
  ExactInstance inst = load_instance(path);
  if (format == "sedumi")
    export_sedumi(inst, out);
  else if (format == "sdpa")
    export_sdpa(inst, out);
  else
    save_instance(inst, out);
  std::cout << "wrote " << format << " export to " << out << "\n";
  return kOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"gapforge: generate, certify and canonicalize SDPs with positive duality gaps"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "generate a family instance");
  std::string family = "single-finite", gen_out = "instance.json", scale_str = "1";
  int gen_m = 2, mess_ops = -1, mess_bound = 2;
  int64_t mess_seed = -1;
  gen->add_option("--family", family, "small|single-finite|single-inf|double|double-flipped|example51");
  gen->add_option("--m", gen_m, "number of variables");
  gen->add_option("--scale", scale_str, "objective multiplier (rational)");
  gen->add_option("--mess-seed", mess_seed, "apply the messing congruence with this seed");
  gen->add_option("--mess-ops", mess_ops, "number of elementary operations (default 3n)");
  gen->add_option("--mess-bound", mess_bound, "multiplier bound for the messing step");
  gen->add_option("--out", gen_out, "output path");

  // certify
  auto* cert = app.add_subcommand("certify", "exact structural gap certificate");
  std::string cert_path;
  bool cert_json = false;
  cert->add_option("path", cert_path, "instance JSON")->required();
  cert->add_flag("--json", cert_json, "machine-readable output");

  // canonicalize
  auto* canon = app.add_subcommand("canonicalize", "two-variable canonical form");
  std::string canon_path;
  bool canon_json = false;
  double tol_psd = 0, tol_zero = 0;
  int angles = 4096;
  canon->add_option("path", canon_path)->required();
  canon->add_option("--tol-psd", tol_psd, "psd tolerance override");
  canon->add_option("--tol-zero", tol_zero, "zero-block tolerance override");
  canon->add_option("--angles", angles, "pencil grid size");
  canon->add_flag("--json", canon_json);

  // singdeg
  auto* sing = app.add_subcommand("singdeg", "singularity degree of (D) or (HD)");
  std::string sing_path, sing_which = "D";
  sing->add_option("path", sing_path)->required();
  sing->add_option("--which", sing_which, "D|HD")->check(CLI::IsMember({"D", "HD"}));

  // claimcheck
  auto* claim = app.add_subcommand("claimcheck", "sampled falsification of the face-chain claims");
  std::string claim_path, claim_which = "D";
  int claim_trials = 1000;
  uint64_t claim_seed = 12345;
  claim->add_option("path", claim_path)->required();
  claim->add_option("--which", claim_which, "D|HD")->check(CLI::IsMember({"D", "HD"}));
  claim->add_option("--trials", claim_trials);
  claim->add_option("--seed", claim_seed);

  // probe
  auto* probe = app.add_subcommand("probe", "alternating-projection distance probe for (D)");
  std::string probe_path;
  int probe_iters = 10000;
  probe->add_option("path", probe_path)->required();
  probe->add_option("--iters", probe_iters);

  // export
  auto* exp = app.add_subcommand("export", "export an instance");
  std::string exp_path, exp_format = "sedumi", exp_out;
  exp->add_option("path", exp_path)->required();
  exp->add_option("--format", exp_format, "sedumi|sdpa|json")->check(CLI::IsMember({"sedumi", "sdpa", "json"}));
  exp->add_option("--out", exp_out, "output path or prefix")->required();

  // library
  auto* lib = app.add_subcommand("library", "emit the instance library");
  std::string lib_out = "library";
  bool lib_double = false;
  lib->add_option("--out", lib_out, "output directory");
  lib->add_flag("--include-double", lib_double, "also emit the double-sequence family");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (gen->parsed()) {
      FamilySpec spec;
      if (family == "small")
        spec.family = Family::Small;
      else if (family == "single-finite")
        spec.family = Family::SingleFinite;
      else if (family == "single-inf")
        spec.family = Family::SingleInfinite;
      else if (family == "double")
        spec.family = Family::Double;
      else if (family == "double-flipped")
        spec.family = Family::DoubleFlipped;
      else if (family == "example51")
        spec.family = Family::Example51;
      else {
        std::cerr << "unknown family: " << family << "\n";
        return kUsage;
      }
      spec.m = gen_m;
      spec.scale = rat_from_string(scale_str);
      if (mess_seed >= 0) {
        spec.mess_seed = static_cast<uint64_t>(mess_seed);
        spec.mess_ops = mess_ops;
        spec.mess_entry_bound = mess_bound;
      }
      ExactInstance inst = generate(spec);
      save_instance(inst, gen_out);
      std::cout << "wrote " << inst.meta.name << " (m=" << inst.m << ", n=" << inst.n << ") to " << gen_out
                << "\n";
      return kOk;
    }
    if (cert->parsed()) return cmd_certify(cert_path, cert_json);
    if (canon->parsed()) return cmd_canonicalize(canon_path, cli_tolerances(tol_psd, tol_zero), angles, canon_json);
    if (sing->parsed()) return cmd_singdeg(sing_path, sing_which);
    if (claim->parsed()) return cmd_claimcheck(claim_path, claim_which, claim_trials, claim_seed);
    if (probe->parsed()) return cmd_probe(probe_path, probe_iters);
    if (exp->parsed()) return cmd_export(exp_path, exp_format, exp_out);
    if (lib->parsed()) {
      LibraryManifest manifest = build_library(lib_out, lib_double);
      std::cout << "wrote " << manifest.entries.size() << " instances to " << lib_out << "\n";
      return kOk;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const std::string msg = e.what();
    if (msg.find("unstructured") != std::string::npos || msg.find("inconclusive") != std::string::npos)
      return kInconclusive;
    return kUsage;
  } catch (const std::logic_error& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kViolation;
  }
  return kUsage;
}

}  // namespace gapforge
