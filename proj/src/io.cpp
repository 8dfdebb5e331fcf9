#include "gapforge/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gapforge {

using nlohmann::json;

namespace {

json sym_to_json(const SymMat<Rat>& m) {
  json rows = json::array();
  for (int i = 0; i < m.order(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.order(); ++j) row.push_back(to_string(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

SymMat<Rat> sym_from_json(const json& rows, const std::string& where) {
  if (!rows.is_array() || rows.empty())
    throw std::invalid_argument(where + ": expected a non-empty array of rows");
  const int n = static_cast<int>(rows.size());
  Mat<Rat> m(n, n);
  for (int i = 0; i < n; ++i) {
    if (!rows[i].is_array() || static_cast<int>(rows[i].size()) != n)
      throw std::invalid_argument(where + ": row " + std::to_string(i + 1) + " has wrong length");
    for (int j = 0; j < n; ++j) m(i, j) = rat_from_string(rows[i][j].get<std::string>());
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (m(i, j) != m(j, i))
        throw std::invalid_argument(where + ": asymmetric entry at (" + std::to_string(i + 1) + "," +
                                    std::to_string(j + 1) + ")");
  return SymMat<Rat>::from_matrix(m);
}

json mat_to_json(const Mat<Rat>& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(to_string(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat<Rat> mat_from_json(const json& rows, const std::string& where) {
  if (!rows.is_array() || rows.empty()) throw std::invalid_argument(where + ": expected array");
  const int r = static_cast<int>(rows.size());
  const int c = static_cast<int>(rows[0].size());
  Mat<Rat> m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rat_from_string(rows[i][j].get<std::string>());
  return m;
}

}  // namespace

std::string instance_to_json(const ExactInstance& inst) {
  json j;
  j["version"] = 1;
  j["name"] = inst.meta.name;
  j["m"] = inst.m;
  j["n"] = inst.n;
  json a = json::array();
  for (const auto& ai : inst.a) a.push_back(sym_to_json(ai));
  j["A"] = std::move(a);
  j["B"] = sym_to_json(inst.b);
  json c = json::array();
  for (const auto& ci : inst.c) c.push_back(to_string(ci));
  j["c"] = std::move(c);

  json meta;
  meta["family"] = to_string(inst.meta.family);
  meta["seed"] = inst.meta.seed;
  meta["assumption11_holds"] = inst.meta.assumption11_holds;
  if (inst.meta.known_gap) {
    meta["known_gap"] = {{"primal", inst.meta.known_gap->first.str()},
                         {"dual", inst.meta.known_gap->second.str()}};
  }
  if (inst.meta.mess) {
    meta["mess"] = {{"seed", inst.meta.mess->seed},
                    {"num_ops", inst.meta.mess->num_ops},
                    {"entry_bound", inst.meta.mess->entry_bound},
                    {"T", mat_to_json(inst.meta.mess->transform)}};
  }
  if (inst.meta.perturb_eps) meta["perturb_eps"] = to_string(*inst.meta.perturb_eps);
  if (inst.meta.dual_point) meta["dual_point"] = sym_to_json(*inst.meta.dual_point);
  if (!inst.meta.reform_history.empty()) meta["reform_history"] = inst.meta.reform_history;
  j["meta"] = std::move(meta);
  return j.dump(2);
}

ExactInstance instance_from_json(const std::string& text, const std::string& where) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(where + ": " + e.what());
  }
  if (!j.contains("version") || j["version"].get<int>() != 1)
    throw std::invalid_argument(where + ": unsupported or missing format version");
  ExactInstance inst;
  inst.m = j.at("m").get<int>();
  inst.n = j.at("n").get<int>();
  inst.meta.name = j.value("name", std::string("unnamed"));
  const json& a = j.at("A");
  if (!a.is_array() || static_cast<int>(a.size()) != inst.m)
    throw std::invalid_argument(where + ": A must hold exactly m matrices");
  for (int i = 0; i < inst.m; ++i)
    inst.a.push_back(sym_from_json(a[i], where + ": A[" + std::to_string(i) + "]"));
  inst.b = sym_from_json(j.at("B"), where + ": B");
  for (const auto& ci : j.at("c")) inst.c.push_back(rat_from_string(ci.get<std::string>()));
  if (j.contains("meta")) {
    const json& meta = j["meta"];
    inst.meta.family = family_from_string(meta.value("family", std::string("unknown")));
    inst.meta.seed = meta.value("seed", 0ULL);
    inst.meta.assumption11_holds = meta.value("assumption11_holds", false);
    if (meta.contains("known_gap"))
      inst.meta.known_gap = {extended_from_string(meta["known_gap"].at("primal").get<std::string>()),
                             extended_from_string(meta["known_gap"].at("dual").get<std::string>())};
    if (meta.contains("mess")) {
      MessLog log;
      log.seed = meta["mess"].value("seed", 0ULL);
      log.num_ops = meta["mess"].value("num_ops", 0);
      log.entry_bound = meta["mess"].value("entry_bound", 0);
      log.transform = mat_from_json(meta["mess"].at("T"), where + ": mess.T");
      inst.meta.mess = std::move(log);
    }
    if (meta.contains("perturb_eps"))
      inst.meta.perturb_eps = rat_from_string(meta["perturb_eps"].get<std::string>());
    if (meta.contains("dual_point"))
      inst.meta.dual_point = sym_from_json(meta["dual_point"], where + ": meta.dual_point");
    if (meta.contains("reform_history"))
      inst.meta.reform_history = meta["reform_history"].get<std::vector<std::string>>();
  }
  inst.validate();
  return inst;
}

void save_instance(const ExactInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << instance_to_json(inst) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

ExactInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return instance_from_json(buf.str(), path);
}

// ---------------------------------------------------------------------------
// SeDuMi-style plain text triple

namespace {

constexpr const char* kLoaderScript = R"(% load_gapforge_sedumi.m
% usage: [A, b, c, K] = load_gapforge_sedumi('gap_single_finite_clean_2')
function [A, b, c, K] = load_gapforge_sedumi(prefix)
  A = dlmread([prefix '.A.txt']);
  b = dlmread([prefix '.b.txt']);
  b = b(:);
  c = dlmread([prefix '.c.txt']);
  c = c(:);
  fid = fopen([prefix '.K.txt']); line = fgetl(fid); fclose(fid);
  parts = strsplit(strtrim(line));
  K = struct('s', str2double(parts{2}));
end
)";

std::string rat_as_decimal(const Rat& q, const std::string& where) {
  if (!is_integer(q))
    throw std::runtime_error(where + ": non-integer entry " + to_string(q) +
                             " has no exact decimal form for the text export");
  return q.get_num().get_str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

void export_sedumi(const ExactInstance& inst, const std::string& prefix) {
  inst.validate();
  std::ostringstream a;
  for (int i = 0; i < inst.m; ++i) {
    // column-major vectorization of A_i
    for (int col = 0; col < inst.n; ++col)
      for (int row = 0; row < inst.n; ++row) {
        a << rat_as_decimal(inst.a[i](row, col), prefix + ".A");
        if (!(col == inst.n - 1 && row == inst.n - 1)) a << ' ';
      }
    a << '\n';
  }
  write_text(prefix + ".A.txt", a.str());

  std::ostringstream b;
  for (int i = 0; i < inst.m; ++i) b << rat_as_decimal(inst.c[i], prefix + ".b") << '\n';
  write_text(prefix + ".b.txt", b.str());

  std::ostringstream c;
  for (int col = 0; col < inst.n; ++col)
    for (int row = 0; row < inst.n; ++row) c << rat_as_decimal(inst.b(row, col), prefix + ".c") << '\n';
  write_text(prefix + ".c.txt", c.str());

  write_text(prefix + ".K.txt", "s " + std::to_string(inst.n) + "\n");

  namespace fs = std::filesystem;
  const fs::path dir = fs::path(prefix).parent_path();
  const fs::path script = (dir.empty() ? fs::path(".") : dir) / "load_gapforge_sedumi.m";
  if (!fs::exists(script)) write_text(script.string(), kLoaderScript);
}

ExactInstance import_sedumi(const std::string& prefix) {
  auto read_numbers = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<std::vector<Rat>> rows;
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::vector<Rat> row;
      std::string tok;
      while (ls >> tok) row.push_back(rat_from_string(tok));
      if (!row.empty()) rows.push_back(std::move(row));
    }
    return rows;
  };
  auto amat = read_numbers(prefix + ".A.txt");
  auto bvec = read_numbers(prefix + ".b.txt");
  auto cvec = read_numbers(prefix + ".c.txt");
  std::ifstream kin(prefix + ".K.txt");
  if (!kin) throw std::runtime_error("cannot open: " + prefix + ".K.txt");
  std::string kind;
  int n = 0;
  kin >> kind >> n;
  if (kind != "s" || n < 2) throw std::runtime_error(prefix + ".K.txt: expected 's <order>'");

  ExactInstance inst;
  inst.n = n;
  inst.m = static_cast<int>(amat.size());
  for (int i = 0; i < inst.m; ++i) {
    if (static_cast<int>(amat[i].size()) != n * n)
      throw std::runtime_error(prefix + ".A.txt: row " + std::to_string(i + 1) + " must have n^2 entries");
    Mat<Rat> m(n, n);
    int k = 0;
    for (int col = 0; col < n; ++col)
      for (int row = 0; row < n; ++row) m(row, col) = amat[i][k++];
    inst.a.push_back(SymMat<Rat>::from_matrix(m));
  }
  std::vector<Rat> flat_c;
  for (const auto& row : cvec)
    for (const auto& v : row) flat_c.push_back(v);
  if (static_cast<int>(flat_c.size()) != n * n)
    throw std::runtime_error(prefix + ".c.txt: expected n^2 entries");
  Mat<Rat> bm(n, n);
  {
    int k = 0;
    for (int col = 0; col < n; ++col)
      for (int row = 0; row < n; ++row) bm(row, col) = flat_c[k++];
  }
  inst.b = SymMat<Rat>::from_matrix(bm);
  for (const auto& row : bvec)
    for (const auto& v : row) inst.c.push_back(v);
  inst.meta.name = std::filesystem::path(prefix).filename().string();
  inst.validate();
  return inst;
}

// ---------------------------------------------------------------------------
// SDPA sparse export

void export_sdpa(const ExactInstance& inst, const std::string& path) {
  inst.validate();
  std::ostringstream out;
  out << "\"" << inst.meta.name << "; objective negated: optimal value = -val(P)\"\n";
  out << inst.m << " = mDIM\n";
  out << "1 = nBLOCK\n";
  out << inst.n << " = bLOCKsTRUCT\n";
  for (int i = 0; i < inst.m; ++i) out << rat_as_decimal(-inst.c[i], path) << (i + 1 < inst.m ? " " : "\n");
  auto emit = [&](int mat_no, const SymMat<Rat>& m, const Rat& sign) {
    for (int i = 0; i < m.order(); ++i)
      for (int j = i; j < m.order(); ++j) {
        const Rat v = sign * m(i, j);
        if (v == 0) continue;
        out << mat_no << " 1 " << (i + 1) << " " << (j + 1) << " " << rat_as_decimal(v, path) << "\n";
      }
  };
  emit(0, inst.b, Rat(-1));
  for (int i = 0; i < inst.m; ++i) emit(i + 1, inst.a[i], Rat(-1));
  write_text(path, out.str());
}

// ---------------------------------------------------------------------------
// Manifest and reports

void save_manifest(const LibraryManifest& manifest, const std::string& path) {
  json j;
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    json je;
    je["name"] = e.name;
    je["m"] = e.m;
    je["n"] = e.n;
    je["known_gap"] = {{"primal", e.primal_value.str()}, {"dual", e.dual_value.str()}};
    if (e.mess_seed) je["mess_seed"] = *e.mess_seed;
    je["json_file"] = e.json_file;
    je["sedumi_prefix"] = e.sedumi_prefix;
    entries.push_back(std::move(je));
  }
  j["instances"] = std::move(entries);
  write_text(path, j.dump(2) + "\n");
}

LibraryManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  json j = json::parse(in);
  LibraryManifest m;
  for (const auto& je : j.at("instances")) {
    LibraryEntry e;
    e.name = je.at("name").get<std::string>();
    e.m = je.at("m").get<int>();
    e.n = je.at("n").get<int>();
    e.primal_value = extended_from_string(je.at("known_gap").at("primal").get<std::string>());
    e.dual_value = extended_from_string(je.at("known_gap").at("dual").get<std::string>());
    if (je.contains("mess_seed")) e.mess_seed = je["mess_seed"].get<uint64_t>();
    e.json_file = je.value("json_file", "");
    e.sedumi_prefix = je.value("sedumi_prefix", "");
    m.entries.push_back(std::move(e));
  }
  return m;
}

std::string certificate_to_json(const ExactInstance& inst, const GapCertificate& cert) {
  json j;
  j["instance"] = inst.meta.name;
  j["primal_value"] = cert.primal_value ? json(cert.primal_value->str()) : json("inconclusive");
  j["dual_value"] = cert.dual_value ? json(cert.dual_value->str()) : json("inconclusive");
  j["weakly_infeasible_dual"] = cert.weakly_infeasible_dual;
  json trace = json::array();
  for (const auto& step : cert.elimination_trace) {
    json js;
    js["constraint"] = step.constraint + 1;
    json z = json::array();
    for (int d : step.zeroed) z.push_back(d + 1);
    js["zeroed"] = std::move(z);
    js["rule"] = step.negated ? "negated-psd-zero-rhs" : "psd-zero-rhs";
    trace.push_back(std::move(js));
  }
  j["elimination_trace"] = std::move(trace);
  if (cert.reduced_dual) {
    json rd;
    json sig = json::array();
    for (const auto& s : cert.reduced_dual->sigma) sig.push_back(to_string(s));
    rd["sigma"] = std::move(sig);
    rd["s"] = cert.reduced_dual->s;
    rd["zero_cost_pos"] = cert.reduced_dual->zero_cost_pos;
    rd["c2prime"] = to_string(cert.reduced_dual->c2prime);
    rd["terminal_constraint"] = cert.reduced_dual->terminal_constraint + 1;
    j["reduced_dual"] = std::move(rd);
  }
  json eqs = json::array();
  for (const auto& row : cert.primal_equations) {
    json jr;
    json coeff = json::array();
    for (const auto& v : row.coeff) coeff.push_back(to_string(v));
    jr["coeff"] = std::move(coeff);
    jr["rhs"] = to_string(row.rhs);
    eqs.push_back(std::move(jr));
  }
  j["primal_equations"] = std::move(eqs);
  if (!cert.primal_note.empty()) j["primal_note"] = cert.primal_note;
  if (!cert.dual_note.empty()) j["dual_note"] = cert.dual_note;
  return j.dump(2);
}

std::string canonical_outcome_to_json(const CanonicalizeOutcome& outcome) {
  json j;
  if (const auto* form = std::get_if<CanonicalForm>(&outcome)) {
    // exact-track scalars serialize as rationals, float-track ones as decimals
    auto scalar = [&](const Rat& v) {
      if (form->exact_backend) return json(to_string(v));
      return json(to_double(v));
    };
    j["outcome"] = "canonical_form";
    j["p"] = form->p;
    j["r"] = form->r;
    j["s"] = form->s;
    json lam = json::array(), sig = json::array();
    for (const auto& v : form->lambda) lam.push_back(scalar(v));
    for (const auto& v : form->sigma) sig.push_back(scalar(v));
    j["lambda"] = std::move(lam);
    j["sigma"] = std::move(sig);
    json mrows = json::array();
    for (int i = 0; i < form->m_block.rows(); ++i) {
      json row = json::array();
      for (int k = 0; k < form->m_block.cols(); ++k) row.push_back(scalar(form->m_block(i, k)));
      mrows.push_back(std::move(row));
    }
    j["M"] = std::move(mrows);
    j["c2prime"] = scalar(form->c2prime);
    j["backend"] = form->exact_backend ? "exact" : "float";
    j["residual"] = form->residual;
    j["transform_ops"] = form->transform_log.size();
    GapCertificate pref = canonical_certificate(*form);
    j["primal_value"] = pref.primal_value->str();
    j["dual_value"] = pref.dual_value->is_infinite()
                          ? json("inf")
                          : (form->exact_backend ? json(pref.dual_value->str())
                                                 : json(to_double(pref.dual_value->finite())));
  } else if (const auto* verdict = std::get_if<NoGapVerdict>(&outcome)) {
    j["outcome"] = "no_gap";
    j["reason"] = to_string(verdict->reason);
    j["detail"] = verdict->detail;
  } else {
    j["outcome"] = "inconclusive";
    j["detail"] = std::get<Inconclusive>(outcome).detail;
  }
  return j.dump(2);
}

}  // namespace gapforge
