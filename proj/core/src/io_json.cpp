#include "abctorus/io_json.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>
#include <vector>

#include "abctorus/errors.hpp"
#include "json.hpp"

namespace abctorus {
namespace {

using nlohmann::json;

json parse_document(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded())
    throw ConfigInvalid(std::string(what) + ": not a valid JSON document");
  if (!j.is_object())
    throw ConfigInvalid(std::string(what) + ": top level must be an object");
  return j;
}

const json& field(const json& j, const char* key, const char* what) {
  auto it = j.find(key);
  if (it == j.end())
    throw ConfigInvalid(std::string(what) + ": missing field '" + key + "'");
  return *it;
}

int dim_field(const json& j, const char* key, const char* what) {
  const json& f = field(j, key, what);
  if (!f.is_number_integer())
    throw ConfigInvalid(std::string(what) + ": '" + key +
                        "' must be an integer");
  const std::int64_t d = f.get<std::int64_t>();
  if (d < 1 || d > kMaxDim)
    throw ConfigInvalid(std::string(what) + ": '" + key +
                        "' must be between 1 and " + std::to_string(kMaxDim));
  return static_cast<int>(d);
}

std::int64_t int_entry(const json& e, const char* what) {
  if (!e.is_number_integer())
    throw ConfigInvalid(std::string(what) + ": expected an integer entry");
  return e.get<std::int64_t>();
}

double double_entry(const json& e, const char* what) {
  if (!e.is_number())
    throw ConfigInvalid(std::string(what) + ": expected a numeric entry");
  return e.get<double>();
}

/// N x N integer matrix from nested rows [[...], ...].
IMat imat_rows(const json& rows, int dim, const char* what) {
  if (!rows.is_array() || rows.size() != static_cast<std::size_t>(dim))
    throw ConfigInvalid(std::string(what) + ": expected " +
                        std::to_string(dim) + " rows");
  IMat m{};
  for (int i = 0; i < dim; ++i) {
    const json& row = rows[i];
    if (!row.is_array() || row.size() != static_cast<std::size_t>(dim))
      throw ConfigInvalid(std::string(what) + ": row " + std::to_string(i) +
                          " must have " + std::to_string(dim) + " entries");
    for (int j = 0; j < dim; ++j) m[i][j] = int_entry(row[j], what);
  }
  return m;
}

DMat dmat_rows(const json& rows, int dim, const char* what) {
  if (!rows.is_array() || rows.size() != static_cast<std::size_t>(dim))
    throw ConfigInvalid(std::string(what) + ": expected " +
                        std::to_string(dim) + " rows");
  DMat m{};
  for (int i = 0; i < dim; ++i) {
    const json& row = rows[i];
    if (!row.is_array() || row.size() != static_cast<std::size_t>(dim))
      throw ConfigInvalid(std::string(what) + ": row " + std::to_string(i) +
                          " must have " + std::to_string(dim) + " entries");
    for (int j = 0; j < dim; ++j) m[i][j] = double_entry(row[j], what);
  }
  return m;
}

json imat_to_rows(const IMat& m, int dim) {
  json rows = json::array();
  for (int i = 0; i < dim; ++i) {
    json row = json::array();
    for (int j = 0; j < dim; ++j) row.push_back(m[i][j]);
    rows.push_back(std::move(row));
  }
  return rows;
}

json dmat_to_rows(const DMat& m, int dim) {
  json rows = json::array();
  for (int i = 0; i < dim; ++i) {
    json row = json::array();
    for (int j = 0; j < dim; ++j) row.push_back(m[i][j]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string fourier_map_to_json(const FourierMap& f, int indent) {
  json j;
  j["dim"] = f.dim();
  json lin = json::array();
  for (int i = 0; i < f.dim(); ++i)
    for (int k = 0; k < f.dim(); ++k) lin.push_back(f.linear()[i][k]);
  j["linear"] = std::move(lin);
  json cst = json::array();
  for (int i = 0; i < f.dim(); ++i) cst.push_back(f.constant()[i]);
  j["constant"] = std::move(cst);
  json ns = json::array();
  json res = json::array();
  json ims = json::array();
  for (const Mode& m : f.modes()) {
    for (int i = 0; i < f.dim(); ++i) {
      ns.push_back(m.n[i]);
      res.push_back(m.c[i].real());
      ims.push_back(m.c[i].imag());
    }
  }
  j["modes"] = json::array({std::move(ns), std::move(res), std::move(ims)});
  return j.dump(indent) + "\n";
}

FourierMap fourier_map_from_json(const std::string& text) {
  const char* what = "fourier_map_from_json";
  json j = parse_document(text, what);
  const int dim = dim_field(j, "dim", what);

  const json& lin = field(j, "linear", what);
  if (!lin.is_array() || lin.size() != static_cast<std::size_t>(dim * dim))
    throw ConfigInvalid(std::string(what) + ": 'linear' must hold " +
                        std::to_string(dim * dim) + " integers");
  IMat m{};
  for (int i = 0; i < dim; ++i)
    for (int k = 0; k < dim; ++k) m[i][k] = int_entry(lin[i * dim + k], what);

  const json& cst = field(j, "constant", what);
  if (!cst.is_array() || cst.size() != static_cast<std::size_t>(dim))
    throw ConfigInvalid(std::string(what) + ": 'constant' must hold " +
                        std::to_string(dim) + " numbers");
  Vec c0 = zero_vec();
  for (int i = 0; i < dim; ++i) c0[i] = double_entry(cst[i], what);

  std::vector<Mode> modes;
  auto it = j.find("modes");
  if (it != j.end() && !(it->is_array() && it->empty())) {
    const json& ms = *it;
    if (!ms.is_array() || ms.size() != 3)
      throw ConfigInvalid(std::string(what) +
                          ": 'modes' must be [[n...], [re...], [im...]]");
    const json& ns = ms[0];
    const json& res = ms[1];
    const json& ims = ms[2];
    if (!ns.is_array() || !res.is_array() || !ims.is_array() ||
        ns.size() != res.size() || ns.size() != ims.size())
      throw ConfigInvalid(std::string(what) +
                          ": mode arrays must be parallel");
    if (ns.size() % static_cast<std::size_t>(dim) != 0)
      throw ConfigInvalid(std::string(what) +
                          ": mode array length must be a multiple of dim");
    const std::size_t count = ns.size() / static_cast<std::size_t>(dim);
    modes.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
      Mode md;
      md.n = zero_ivec();
      md.c = CVec{};
      for (int i = 0; i < dim; ++i) {
        const std::size_t at = k * static_cast<std::size_t>(dim) +
                               static_cast<std::size_t>(i);
        md.n[i] = int_entry(ns[at], what);
        md.c[i] = std::complex<double>(double_entry(res[at], what),
                                       double_entry(ims[at], what));
      }
      modes.push_back(md);
    }
  }
  return FourierMap(dim, m, c0, std::move(modes));
}

std::string action_to_json(const AffineABCAction& act, int indent) {
  json j;
  j["N"] = act.N();
  j["K"] = act.K();
  j["A"] = imat_to_rows(act.A().entries(), act.N());
  j["B"] = imat_to_rows(act.B().entries(), act.N());
  json rho = json::array();
  for (int k = 0; k < act.K(); ++k)
    rho.push_back(dmat_to_rows(act.rho(k).entries(), act.N()));
  j["rho"] = std::move(rho);
  return j.dump(indent) + "\n";
}

AffineABCAction action_from_json(const std::string& text, double tol) {
  const char* what = "action_from_json";
  json j = parse_document(text, what);
  const int n = dim_field(j, "N", what);

  const json& kf = field(j, "K", what);
  if (!kf.is_number_integer() || kf.get<std::int64_t>() < 1)
    throw ConfigInvalid(std::string(what) + ": 'K' must be a positive integer");
  const int k = static_cast<int>(kf.get<std::int64_t>());

  IntMatrix a(n, imat_rows(field(j, "A", what), n, what));
  IntMatrix b(n, imat_rows(field(j, "B", what), n, what));

  const json& rhos_j = field(j, "rho", what);
  if (!rhos_j.is_array() || rhos_j.size() != static_cast<std::size_t>(k))
    throw ConfigInvalid(std::string(what) + ": 'rho' must hold " +
                        std::to_string(k) + " matrices");
  std::vector<RotationMatrix> rhos;
  rhos.reserve(k);
  for (int i = 0; i < k; ++i)
    rhos.emplace_back(n, dmat_rows(rhos_j[i], n, what));
  // the action constructor certifies each matrix against (A, B) itself
  return AffineABCAction(a, b, std::move(rhos), tol);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigInvalid("cannot open file for reading: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  if (in.bad()) throw ConfigInvalid("read failed: " + path);
  return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigInvalid("cannot open file for writing: " + path);
  out << text;
  out.flush();
  if (!out) throw ConfigInvalid("write failed: " + path);
}

}  // namespace abctorus
