#include "qctl/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qctl::io {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Shape-checked readers collecting diagnostics.

class Checker
{
public:
  std::vector<std::string> diagnostics;

  void fail(const std::string & field, const std::string & msg) { diagnostics.push_back("field '" + field + "': " + msg); }

  const json * require(const json & doc, const std::string & key)
  {
    if (!doc.contains(key)) {
      fail(key, "is required");
      return nullptr;
    }
    return &doc.at(key);
  }

  std::optional<double> number(const json & j, const std::string & field)
  {
    if (!j.is_number()) {
      fail(field, "expected a number");
      return std::nullopt;
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
      fail(field, "must be finite");
      return std::nullopt;
    }
    return v;
  }

  std::optional<Eigen::VectorXd> vector(const json & j, const std::string & field)
  {
    if (!j.is_array() || j.empty()) {
      fail(field, "expected a non-empty array of numbers");
      return std::nullopt;
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    bool ok = true;
    for (std::size_t i = 0; i < j.size(); ++i) {
      const auto x = number(j[i], field + "[" + std::to_string(i) + "]");
      if (x) {
        v(static_cast<Eigen::Index>(i)) = *x;
      } else {
        ok = false;
      }
    }
    return ok ? std::optional<Eigen::VectorXd>(v) : std::nullopt;
  }

  /// A number (1 x 1) or an array of equal-length rows.
  std::optional<Eigen::MatrixXd> matrix(const json & j, const std::string & field)
  {
    if (j.is_number()) {
      const auto x = number(j, field);
      if (!x) { return std::nullopt; }
      return Eigen::MatrixXd::Constant(1, 1, *x);
    }
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
      fail(field, "expected a matrix (array of rows) or a number");
      return std::nullopt;
    }
    const std::size_t cols = j[0].size();
    if (cols == 0) {
      fail(field, "matrix rows must be non-empty");
      return std::nullopt;
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    bool ok = true;
    for (std::size_t r = 0; r < j.size(); ++r) {
      const std::string rf = field + "[" + std::to_string(r) + "]";
      if (!j[r].is_array() || j[r].size() != cols) {
        fail(rf, "expected a row of length " + std::to_string(cols));
        ok = false;
        continue;
      }
      for (std::size_t c = 0; c < cols; ++c) {
        const auto x = number(j[r][c], rf + "[" + std::to_string(c) + "]");
        if (x) {
          m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *x;
        } else {
          ok = false;
        }
      }
    }
    return ok ? std::optional<Eigen::MatrixXd>(m) : std::nullopt;
  }

  /// One matrix, or an array of matrices (three levels of nesting).
  std::optional<std::vector<Eigen::MatrixXd>> matrix_list(const json & j, const std::string & field)
  {
    const bool is_list = j.is_array() && !j.empty() && j[0].is_array() && !j[0].empty() && j[0][0].is_array();
    if (!is_list) {
      auto m = matrix(j, field);
      if (!m) { return std::nullopt; }
      return std::vector<Eigen::MatrixXd>{*m};
    }
    std::vector<Eigen::MatrixXd> out;
    bool ok = true;
    for (std::size_t k = 0; k < j.size(); ++k) {
      auto m = matrix(j[k], field + "[" + std::to_string(k) + "]");
      if (m) {
        out.push_back(*m);
      } else {
        ok = false;
      }
    }
    return ok ? std::optional<std::vector<Eigen::MatrixXd>>(out) : std::nullopt;
  }

  void shape(const Eigen::MatrixXd & m, Eigen::Index rows, Eigen::Index cols, const std::string & field)
  {
    if (m.rows() != rows || m.cols() != cols) {
      fail(field, "expected shape " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                    std::to_string(m.cols()));
    }
  }

  void probability_vector(const Eigen::VectorXd & v, const std::string & field)
  {
    if ((v.array() < 0.0).any()) { fail(field, "probabilities must be non-negative"); }
    if (std::abs(v.sum() - 1.0) > kProbabilityTolerance) { fail(field, "probabilities must sum to 1"); }
  }
};

struct Common
{
  std::string kind;
  double q{0.0};
  double lambda{1.0};
  std::size_t horizon{1};
};

std::optional<Common> check_common(Checker & ck, const json & doc)
{
  if (!doc.is_object()) {
    ck.fail("<root>", "expected a JSON object");
    return std::nullopt;
  }
  Common c;
  bool ok = true;
  if (doc.contains("schema_version") && !(doc["schema_version"].is_number_integer() && doc["schema_version"].get<int>() == kSchemaVersion)) {
    ck.fail("schema_version", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
    ok = false;
  }
  if (const json * k = ck.require(doc, "kind")) {
    if (!k->is_string() || (*k != "qkl" && *k != "troc" && *k != "qlqr")) {
      ck.fail("kind", "must be one of \"qkl\", \"troc\", \"qlqr\"");
      ok = false;
    } else {
      c.kind = k->get<std::string>();
    }
  } else {
    ok = false;
  }
  if (const json * q = ck.require(doc, "q")) {
    const auto v = ck.number(*q, "q");
    if (v && !(*v >= 0.0 && *v < 1.0)) {
      ck.fail("q", "must lie in [0, 1)");
      ok = false;
    } else if (v) {
      c.q = *v;
    } else {
      ok = false;
    }
  } else {
    ok = false;
  }
  if (const json * l = ck.require(doc, "lambda")) {
    const auto v = ck.number(*l, "lambda");
    if (v && !(*v > 0.0)) {
      ck.fail("lambda", "must be positive");
      ok = false;
    } else if (v) {
      c.lambda = *v;
    } else {
      ok = false;
    }
  } else {
    ok = false;
  }
  if (const json * h = ck.require(doc, "horizon")) {
    if (!h->is_number_integer() || h->get<long long>() < 1) {
      ck.fail("horizon", "must be an integer >= 1");
      ok = false;
    } else {
      c.horizon = h->get<std::size_t>();
    }
  } else {
    ok = false;
  }
  if (doc.contains("seed") && !doc["seed"].is_number_unsigned()) {
    ck.fail("seed", "must be a non-negative integer");
    ok = false;
  }
  return ok ? std::optional<Common>(c) : std::nullopt;
}

std::optional<QklInstance> check_qkl(Checker & ck, const json & doc, const Common & c)
{
  const json * pm = ck.require(doc, "passive_matrix");
  const json * sc = ck.require(doc, "state_cost");
  if (!pm || !sc) { return std::nullopt; }
  auto p0 = ck.matrix(*pm, "passive_matrix");
  auto cost = ck.vector(*sc, "state_cost");
  if (!p0 || !cost) { return std::nullopt; }
  const Eigen::Index n = cost->size();
  const std::size_t before = ck.diagnostics.size();
  ck.shape(*p0, n, n, "passive_matrix");
  if ((p0->array() < 0.0).any()) { ck.fail("passive_matrix", "entries must be non-negative"); }
  Eigen::VectorXd initial = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  if (doc.contains("initial")) {
    auto init = ck.vector(doc["initial"], "initial");
    if (init) {
      if (init->size() != n) { ck.fail("initial", "expected length " + std::to_string(n)); }
      ck.probability_vector(*init, "initial");
      initial = *init;
    }
  }
  if (doc.contains("stationary") && !doc["stationary"].is_boolean()) { ck.fail("stationary", "expected a boolean"); }
  if (ck.diagnostics.size() != before) { return std::nullopt; }

  QklInstance inst;
  inst.passive_matrix = *p0;
  inst.state_cost = *cost;
  inst.horizon = c.horizon;
  inst.lambda = c.lambda;
  inst.q = DeformationParameter(c.q);
  inst.initial = DiscreteDistribution(std::vector<double>(initial.data(), initial.data() + initial.size()));
  return inst;
}

std::optional<FiniteTrocInstance> check_troc(Checker & ck, const json & doc, const Common & c)
{
  const json * tr = ck.require(doc, "transitions");
  const json * sc = ck.require(doc, "stage_cost");
  const json * tc = ck.require(doc, "terminal_cost");
  if (!tr || !sc || !tc) { return std::nullopt; }
  auto terminal = ck.vector(*tc, "terminal_cost");
  if (!tr->is_array() || tr->empty()) {
    ck.fail("transitions", "expected an array with one n x n matrix per action");
    return std::nullopt;
  }
  std::vector<Eigen::MatrixXd> transitions;
  for (std::size_t u = 0; u < tr->size(); ++u) {
    auto m = ck.matrix((*tr)[u], "transitions[" + std::to_string(u) + "]");
    if (m) { transitions.push_back(*m); }
  }
  auto costs = ck.matrix_list(*sc, "stage_cost");
  if (!terminal || transitions.size() != tr->size() || !costs) { return std::nullopt; }

  const std::size_t before = ck.diagnostics.size();
  const Eigen::Index n = terminal->size();
  const auto m = static_cast<Eigen::Index>(transitions.size());
  for (std::size_t u = 0; u < transitions.size(); ++u) {
    const std::string f = "transitions[" + std::to_string(u) + "]";
    ck.shape(transitions[u], n, n, f);
    if (transitions[u].rows() != n || transitions[u].cols() != n) { continue; }
    for (Eigen::Index x = 0; x < n; ++x) {
      ck.probability_vector(transitions[u].row(x).transpose(), f + "[" + std::to_string(x) + "]");
    }
  }
  if (costs->size() != 1 && costs->size() != c.horizon) { ck.fail("stage_cost", "must be one n x m matrix or one per stage"); }
  for (std::size_t k = 0; k < costs->size(); ++k) {
    ck.shape((*costs)[k], n, m, costs->size() == 1 ? "stage_cost" : "stage_cost[" + std::to_string(k) + "]");
  }
  if (doc.contains("initial")) {
    auto init = ck.vector(doc["initial"], "initial");
    if (init) {
      if (init->size() != n) { ck.fail("initial", "expected length " + std::to_string(n)); }
      ck.probability_vector(*init, "initial");
    }
  }
  if (ck.diagnostics.size() != before) { return std::nullopt; }

  FiniteTrocInstance inst;
  inst.transitions = std::move(transitions);
  inst.stage_costs = std::move(*costs);
  inst.terminal_cost = *terminal;
  inst.horizon = c.horizon;
  inst.lambda = c.lambda;
  inst.q = DeformationParameter(c.q);
  return inst;
}

std::optional<QlqrInstance> check_qlqr(Checker & ck, const json & doc, const Common & c)
{
  const json * ja = ck.require(doc, "A");
  const json * jb = ck.require(doc, "B");
  const json * jq = ck.require(doc, "Q");
  const json * jr = ck.require(doc, "R");
  const json * jx = ck.require(doc, "initial_state");
  if (!ja || !jb || !jq || !jr || !jx) { return std::nullopt; }
  auto a = ck.matrix_list(*ja, "A");
  auto b = ck.matrix_list(*jb, "B");
  auto q = ck.matrix_list(*jq, "Q");
  auto r = ck.matrix_list(*jr, "R");
  auto x0 = ck.vector(*jx, "initial_state");
  if (!a || !b || !q || !r || !x0) { return std::nullopt; }

  const std::size_t before = ck.diagnostics.size();
  const Eigen::Index n = a->front().rows();
  const Eigen::Index m = b->front().cols();
  auto check_list = [&](const std::vector<Eigen::MatrixXd> & list, Eigen::Index rows, Eigen::Index cols, const std::string & name) {
    if (list.size() != 1 && list.size() != c.horizon) { ck.fail(name, "must be one matrix or one per stage"); }
    for (std::size_t k = 0; k < list.size(); ++k) {
      ck.shape(list[k], rows, cols, list.size() == 1 ? name : name + "[" + std::to_string(k) + "]");
    }
  };
  check_list(*a, n, n, "A");
  check_list(*b, n, m, "B");
  check_list(*q, n, n, "Q");
  check_list(*r, m, m, "R");
  std::vector<Eigen::MatrixXd> s{Eigen::MatrixXd::Zero(n, m)};
  if (doc.contains("S")) {
    auto sj = ck.matrix_list(doc["S"], "S");
    if (sj) {
      check_list(*sj, n, m, "S");
      s = *sj;
    }
  }
  Eigen::MatrixXd qt = q->front();
  if (doc.contains("Q_T")) {
    auto qj = ck.matrix(doc["Q_T"], "Q_T");
    if (qj) {
      ck.shape(*qj, n, n, "Q_T");
      qt = *qj;
    }
  }
  if (x0->size() != n) { ck.fail("initial_state", "expected length " + std::to_string(n)); }
  double radius = 0.0;
  if (doc.contains("initial_set_radius")) {
    const auto v = ck.number(doc["initial_set_radius"], "initial_set_radius");
    if (v && *v < 0.0) { ck.fail("initial_set_radius", "must be non-negative"); }
    if (v) { radius = *v; }
  }
  if (ck.diagnostics.size() != before) { return std::nullopt; }

  QlqrInstance inst;
  inst.A = std::move(*a);
  inst.B = std::move(*b);
  inst.Q = std::move(*q);
  inst.S = std::move(s);
  inst.R = std::move(*r);
  inst.QT = qt;
  inst.horizon = c.horizon;
  inst.lambda = c.lambda;
  inst.q = DeformationParameter(c.q);
  inst.initial_state = *x0;
  inst.initial_set_radius = radius;
  return inst;
}

std::string join(const std::vector<std::string> & parts)
{
  std::string out;
  for (const auto & p : parts) {
    if (!out.empty()) { out += "; "; }
    out += p;
  }
  return out;
}

json matrix_json(const Eigen::MatrixXd & m)
{
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) { row.push_back(m(r, c)); }
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Eigen::VectorXd & v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::MatrixXd matrix_from(const json & j, const std::string & field)
{
  Checker ck;
  auto m = ck.matrix(j, field);
  if (!m) { throw InstanceError("solution: " + join(ck.diagnostics)); }
  return *m;
}

Eigen::VectorXd vector_from(const json & j, const std::string & field)
{
  Checker ck;
  auto v = ck.vector(j, field);
  if (!v) { throw InstanceError("solution: " + join(ck.diagnostics)); }
  return *v;
}

std::vector<Eigen::MatrixXd> matrices_from(const json & j, const std::string & field)
{
  if (!j.is_array()) { throw InstanceError("solution: field '" + field + "' must be an array"); }
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t k = 0; k < j.size(); ++k) { out.push_back(matrix_from(j[k], field + "[" + std::to_string(k) + "]")); }
  return out;
}

const json & field_of(const json & doc, const char * key, const char * kind)
{
  if (!doc.is_object() || doc.value("kind", "") != kind) { throw InstanceError(std::string("solution: expected a ") + kind + " solution document"); }
  if (!doc.contains(key)) { throw InstanceError(std::string("solution: field '") + key + "' is required"); }
  return doc.at(key);
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::string> validate_instance_json(const json & doc)
{
  Checker ck;
  auto common = check_common(ck, doc);
  if (!common && doc.is_object()) {
    // Keep going so one pass reports the payload problems as well.
    const json kind = doc.value("kind", json());
    if (kind == "qkl" || kind == "troc" || kind == "qlqr") {
      common = Common{};
      common->kind = kind.get<std::string>();
      const json h = doc.value("horizon", json());
      if (h.is_number_integer() && h.get<long long>() >= 1) { common->horizon = h.get<std::size_t>(); }
    }
  }
  if (!common) { return ck.diagnostics; }
  if (common->kind == "qkl") {
    (void)check_qkl(ck, doc, *common);
  } else if (common->kind == "troc") {
    (void)check_troc(ck, doc, *common);
  } else {
    (void)check_qlqr(ck, doc, *common);
  }
  return ck.diagnostics;
}

LoadedInstance parse_instance(const json & doc, const Overrides & overrides)
{
  json effective = doc;
  if (effective.is_object()) {
    if (overrides.q) { effective["q"] = *overrides.q; }
    if (overrides.lambda) { effective["lambda"] = *overrides.lambda; }
    if (overrides.horizon) { effective["horizon"] = *overrides.horizon; }
    if (overrides.seed) { effective["seed"] = *overrides.seed; }
  }
  Checker ck;
  const auto common = check_common(ck, effective);
  if (!common) { throw InstanceError(join(ck.diagnostics)); }

  LoadedInstance out;
  out.kind = common->kind;
  out.seed = effective.value("seed", std::uint64_t{0});
  try {
    if (common->kind == "qkl") {
      auto inst = check_qkl(ck, effective, *common);
      if (!inst) { throw InstanceError(join(ck.diagnostics)); }
      inst->validate();
      out.stationary = effective.value("stationary", false);
      out.instance = std::move(*inst);
    } else if (common->kind == "troc") {
      auto inst = check_troc(ck, effective, *common);
      if (!inst) { throw InstanceError(join(ck.diagnostics)); }
      inst->validate();
      out.instance = std::move(*inst);
    } else {
      auto inst = check_qlqr(ck, effective, *common);
      if (!inst) { throw InstanceError(join(ck.diagnostics)); }
      inst->validate();
      out.instance = std::move(*inst);
    }
  } catch (const InstanceError &) {
    throw;
  } catch (const std::invalid_argument & e) {
    throw InstanceError(e.what());
  }
  json hashed = effective;
  hashed.erase("seed");
  out.hash = fnv1a64(hashed.dump());
  out.effective = std::move(effective);
  return out;
}

json read_json_file(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw InstanceError("cannot open '" + path.string() + "'"); }
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error & e) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw InstanceError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(column) + ": malformed JSON");
  }
}

LoadedInstance load_instance_file(const std::filesystem::path & path, const Overrides & overrides)
{
  return parse_instance(read_json_file(path), overrides);
}

// ---------------------------------------------------------------------------
// Solutions

json to_json(const QklSolution & s)
{
  json doc;
  doc["kind"] = "qkl";
  doc["schema_version"] = kSchemaVersion;
  doc["lambda"] = s.lambda;
  json values = json::array();
  for (const auto & v : s.values) { values.push_back(vector_json(v)); }
  json mats = json::array();
  for (const auto & m : s.controlled_matrices) { mats.push_back(matrix_json(m)); }
  doc["values"] = std::move(values);
  doc["controlled_matrices"] = std::move(mats);
  doc["normalizers"] = matrix_json(s.normalizers);
  return doc;
}

json to_json(const TrocSolution & s)
{
  json doc;
  doc["kind"] = "troc";
  doc["schema_version"] = kSchemaVersion;
  doc["value"] = matrix_json(s.value);
  json qv = json::array();
  for (const auto & m : s.q_values) { qv.push_back(matrix_json(m)); }
  doc["q_values"] = std::move(qv);
  json pol = json::array();
  for (const auto & stage : s.policy) {
    json rows = json::array();
    for (const auto & d : stage) { rows.push_back(std::vector<double>(d.weights().begin(), d.weights().end())); }
    pol.push_back(std::move(rows));
  }
  doc["policy"] = std::move(pol);
  doc["normalizers"] = matrix_json(s.normalizers);
  return doc;
}

json to_json(const QlqrSolution & s)
{
  json doc;
  doc["kind"] = "qlqr";
  doc["schema_version"] = kSchemaVersion;
  doc["lambda"] = s.lambda;
  doc["q"] = s.q.value();
  auto list = [](const std::vector<Eigen::MatrixXd> & ms) {
    json out = json::array();
    for (const auto & m : ms) { out.push_back(matrix_json(m)); }
    return out;
  };
  doc["pi_matrices"] = list(s.pi_matrices);
  doc["gains"] = list(s.gains);
  doc["r_tilde"] = list(s.r_tilde);
  doc["noise_covariances"] = list(s.noise_covariances);
  doc["etas"] = s.etas;
  json radii = json::array();
  for (const auto & r : s.support_radii) { radii.push_back(vector_json(r)); }
  doc["support_radii"] = std::move(radii);
  return doc;
}

QklSolution qkl_solution_from_json(const json & doc)
{
  QklSolution s;
  const json & lam = field_of(doc, "lambda", "qkl");
  if (!lam.is_number()) { throw InstanceError("solution: field 'lambda' must be a number"); }
  s.lambda = lam.get<double>();
  const json & values = field_of(doc, "values", "qkl");
  if (!values.is_array()) { throw InstanceError("solution: field 'values' must be an array"); }
  for (std::size_t k = 0; k < values.size(); ++k) { s.values.push_back(vector_from(values[k], "values[" + std::to_string(k) + "]")); }
  s.controlled_matrices = matrices_from(field_of(doc, "controlled_matrices", "qkl"), "controlled_matrices");
  s.normalizers = matrix_from(field_of(doc, "normalizers", "qkl"), "normalizers");
  if (s.values.size() != s.controlled_matrices.size() + 1) { throw InstanceError("solution: values/controlled_matrices length mismatch"); }
  return s;
}

TrocSolution troc_solution_from_json(const json & doc)
{
  TrocSolution s;
  s.value = matrix_from(field_of(doc, "value", "troc"), "value");
  s.q_values = matrices_from(field_of(doc, "q_values", "troc"), "q_values");
  s.normalizers = matrix_from(field_of(doc, "normalizers", "troc"), "normalizers");
  const json & pol = field_of(doc, "policy", "troc");
  if (!pol.is_array()) { throw InstanceError("solution: field 'policy' must be an array"); }
  try {
    for (const auto & stage : pol) {
      std::vector<DiscreteDistribution> rows;
      for (const auto & d : stage) { rows.emplace_back(d.get<std::vector<double>>()); }
      s.policy.push_back(std::move(rows));
    }
  } catch (const std::exception & e) {
    throw InstanceError(std::string("solution: field 'policy': ") + e.what());
  }
  return s;
}

QlqrSolution qlqr_solution_from_json(const json & doc)
{
  QlqrSolution s;
  const json & lam = field_of(doc, "lambda", "qlqr");
  const json & q = field_of(doc, "q", "qlqr");
  if (!lam.is_number() || !q.is_number()) { throw InstanceError("solution: 'lambda' and 'q' must be numbers"); }
  s.lambda = lam.get<double>();
  try {
    s.q = DeformationParameter(q.get<double>());
  } catch (const std::invalid_argument & e) {
    throw InstanceError(std::string("solution: field 'q': ") + e.what());
  }
  s.pi_matrices = matrices_from(field_of(doc, "pi_matrices", "qlqr"), "pi_matrices");
  s.gains = matrices_from(field_of(doc, "gains", "qlqr"), "gains");
  s.r_tilde = matrices_from(field_of(doc, "r_tilde", "qlqr"), "r_tilde");
  s.noise_covariances = matrices_from(field_of(doc, "noise_covariances", "qlqr"), "noise_covariances");
  const json & etas = field_of(doc, "etas", "qlqr");
  if (!etas.is_array()) { throw InstanceError("solution: field 'etas' must be an array"); }
  for (const auto & e : etas) {
    if (!e.is_number()) { throw InstanceError("solution: field 'etas' must hold numbers"); }
    s.etas.push_back(e.get<double>());
  }
  const json & radii = field_of(doc, "support_radii", "qlqr");
  if (!radii.is_array()) { throw InstanceError("solution: field 'support_radii' must be an array"); }
  for (std::size_t k = 0; k < radii.size(); ++k) { s.support_radii.push_back(vector_from(radii[k], "support_radii[" + std::to_string(k) + "]")); }
  const std::size_t t = s.gains.size();
  if (s.pi_matrices.size() != t + 1 || s.r_tilde.size() != t || s.noise_covariances.size() != t || s.etas.size() != t ||
      s.support_radii.size() != t) {
    throw InstanceError("solution: per-stage arrays have inconsistent lengths");
  }
  return s;
}

// ---------------------------------------------------------------------------

std::string format_double(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_row(const std::vector<double> & values)
{
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) { out += ','; }
    out += format_double(values[i]);
  }
  out += '\n';
  return out;
}

void write_file_atomic(const std::filesystem::path & path, std::string_view content)
{
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) { throw std::runtime_error("cannot write '" + tmp.string() + "'"); }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) { throw std::runtime_error("write failed for '" + tmp.string() + "'"); }
  }
  std::filesystem::rename(tmp, path);
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v)
{
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace qctl::io
