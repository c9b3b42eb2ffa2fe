#include "lrb/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lrb {

using nlohmann::json;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

std::string_view kind_name(SessionKind k) {
  return k == SessionKind::kExplore ? "explore" : "exploit";
}

SessionKind kind_from(std::string_view s) {
  if (s == "explore") return SessionKind::kExplore;
  if (s == "exploit") return SessionKind::kExploit;
  throw std::invalid_argument("records_from_csv: unknown session kind '" + std::string(s) + "'");
}

std::vector<std::string> split_line(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string records_to_csv(std::span<const InteractionRecord> records) {
  std::string out = "n,l,b,a,x,kind,gamma\n";
  for (const InteractionRecord& r : records) {
    out += std::to_string(r.session);
    out += ',';
    out += std::to_string(r.step);
    out += ',';
    out += std::to_string(r.user);
    out += ',';
    out += std::to_string(r.action);
    out += ',';
    out += format_double(r.reward);
    out += ',';
    out += kind_name(r.kind);
    out += ',';
    out += format_double(r.gamma);
    out += '\n';
  }
  return out;
}

std::vector<InteractionRecord> records_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "n,l,b,a,x,kind,gamma")
    throw std::invalid_argument("records_from_csv: missing or wrong header");
  std::vector<InteractionRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_line(line, ',');
    if (f.size() != 7) throw std::invalid_argument("records_from_csv: malformed row: " + line);
    out.push_back(InteractionRecord{std::stol(f[0]), std::stoi(f[1]), std::stoi(f[2]),
                                    std::stoi(f[3]), std::stod(f[4]), kind_from(f[5]),
                                    std::stod(f[6])});
  }
  return out;
}

std::string regret_to_csv(std::span<const double> cumulative) {
  std::string out = "t,cumulative_regret\n";
  for (std::size_t t = 0; t < cumulative.size(); ++t) {
    out += std::to_string(t + 1);
    out += ',';
    out += format_double(cumulative[t]);
    out += '\n';
  }
  return out;
}

namespace {

json matrix_to_json(const Matrix& m) {
  json arr = json::array();
  for (const double x : m.flat()) arr.push_back(x);
  return arr;
}

Matrix matrix_from_json(const json& arr, int rows, int cols) {
  if (static_cast<int>(arr.size()) != rows * cols)
    throw std::invalid_argument("matrix_from_json: size mismatch");
  Matrix m(rows, cols);
  int i = 0;
  for (double& x : m.flat()) x = arr[i++].get<double>();
  return m;
}

}  // namespace

std::string model_to_json(const LatentModel& model) {
  json j;
  j["actions"] = model.num_actions();
  j["users"] = model.num_users();
  j["classes"] = model.num_classes();
  j["u"] = matrix_to_json(model.u);
  j["v"] = matrix_to_json(model.v);
  j["beta"] = model.beta;
  j["r_noise"] = model.r_noise;
  j["ell"] = model.ell;
  j["seed"] = model.seed;
  j["generator"] = {{"u_min", model.gen.u_min},
                    {"u_max", model.gen.u_max},
                    {"dirichlet_alpha", model.gen.dirichlet_alpha},
                    {"v_floor", model.gen.v_floor},
                    {"beta", model.gen.beta}};
  return j.dump(2) + "\n";
}

LatentModel model_from_json(const std::string& text) {
  const json j = json::parse(text);
  LatentModel m;
  const int a = j.at("actions").get<int>();
  const int b = j.at("users").get<int>();
  const int c = j.at("classes").get<int>();
  m.u = matrix_from_json(j.at("u"), a, c);
  m.v = matrix_from_json(j.at("v"), b, c);
  m.beta = j.at("beta").get<std::vector<double>>();
  m.r_noise = j.at("r_noise").get<double>();
  m.ell = j.at("ell").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("generator")) {
    const json& g = j.at("generator");
    m.gen.u_min = g.value("u_min", 0.0);
    m.gen.u_max = g.value("u_max", 1.0);
    m.gen.dirichlet_alpha = g.value("dirichlet_alpha", 1.0);
    m.gen.v_floor = g.value("v_floor", 0.0);
    if (g.contains("beta")) m.gen.beta = g.at("beta").get<std::vector<double>>();
  }
  if (static_cast<int>(m.beta.size()) != b)
    throw std::invalid_argument("model_from_json: beta length must equal user count");
  if (m.ell < 3) throw std::invalid_argument("model_from_json: ell must be >= 3");
  return m;
}

std::string feature_estimate_to_json(const FeatureEstimate& fe) {
  json j;
  j["n"] = fe.sessions;
  json lambdas = json::array();
  for (const RobustEigPair& p : fe.eigpairs) lambdas.push_back(p.lambda);
  j["lambda"] = lambdas;
  j["u_bar"] = matrix_to_json(fe.u_bar);
  j["v_bar"] = fe.v_bar;
  return j.dump(2) + "\n";
}

FeatureEstimate feature_estimate_from_json(const std::string& text) {
  const json j = json::parse(text);
  FeatureEstimate fe;
  fe.sessions = j.at("n").get<long>();
  const std::vector<double> lambdas = j.at("lambda").get<std::vector<double>>();
  const int c = static_cast<int>(lambdas.size());
  if (c == 0) throw std::invalid_argument("feature_estimate_from_json: empty lambda");
  const int a = static_cast<int>(j.at("u_bar").size()) / c;
  fe.u_bar = matrix_from_json(j.at("u_bar"), a, c);
  fe.v_bar = j.at("v_bar").get<std::vector<double>>();
  fe.eigpairs.reserve(c);
  for (const double l : lambdas) fe.eigpairs.push_back(RobustEigPair{l, {}});
  fe.v_valid.assign(c, false);
  for (int i = 0; i < c; ++i) fe.v_valid[i] = lambdas[i] > 1e-9;
  return fe;
}

std::string moments_to_json(const SymMatrix& m2, const SymTensor3& m3, long sessions) {
  const int a = m2.dim();
  json j;
  j["actions"] = a;
  j["n"] = sessions;
  json j2 = json::array();
  for (int i = 0; i < a; ++i)
    for (int k = 0; k < a; ++k) j2.push_back(m2(i, k));
  j["m2"] = std::move(j2);
  json j3 = json::array();
  for (const double x : m3.flat()) j3.push_back(x);
  j["m3"] = std::move(j3);
  return j.dump() + "\n";
}

MomentsFile moments_from_json(const std::string& text) {
  const json j = json::parse(text);
  const int a = j.at("actions").get<int>();
  MomentsFile out;
  out.sessions = j.at("n").get<long>();
  std::vector<double> dense2(static_cast<std::size_t>(a) * a);
  const json& j2 = j.at("m2");
  if (j2.size() != dense2.size()) throw std::invalid_argument("moments_from_json: m2 size mismatch");
  for (std::size_t i = 0; i < dense2.size(); ++i) dense2[i] = j2[i].get<double>();
  out.m2 = SymMatrix::from_dense_symmetrized(a, dense2);
  std::vector<double> dense3(static_cast<std::size_t>(a) * a * a);
  const json& j3 = j.at("m3");
  if (j3.size() != dense3.size()) throw std::invalid_argument("moments_from_json: m3 size mismatch");
  for (std::size_t i = 0; i < dense3.size(); ++i) dense3[i] = j3[i].get<double>();
  out.m3 = SymTensor3::from_dense_symmetrized(a, dense3);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("short write: " + path);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace lrb
