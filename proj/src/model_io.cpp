#include "msfa/model_io.hpp"

#include <json.hpp>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace msfa {

namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kFormat = "msfa-model";

std::string hex(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double unhex(const Json& j) {
  if (!j.is_string()) throw CorruptModelError("expected a hex float string");
  const auto& s = j.get_ref<const std::string&>();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw CorruptModelError("malformed hex float '" + s + "'");
  return v;
}

Json encode(const Matrix& m) {
  Json j;
  j["dtype"] = "f64";
  j["shape"] = {m.rows(), m.cols()};
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(hex(m(r, c)));
  j["data"] = std::move(data);
  return j;
}

Json encode(const Vector& v) {
  Json j;
  j["dtype"] = "f64";
  j["shape"] = {v.size()};
  Json data = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(hex(v[i]));
  j["data"] = std::move(data);
  return j;
}

Json encode(const std::vector<double>& v) {
  return encode(Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()))));
}

const Json& at(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw CorruptModelError(std::string("missing field '") + key + "'");
  return j.at(key);
}

template <typename T>
T get(const Json& j, const char* key) {
  try {
    return at(j, key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw CorruptModelError(std::string("field '") + key + "' has the wrong type");
  }
}

Matrix decode_matrix(const Json& j) {
  const auto& shape = at(j, "shape");
  const auto& data = at(j, "data");
  if (get<std::string>(j, "dtype") != "f64" || !shape.is_array() || shape.size() != 2 || !data.is_array())
    throw CorruptModelError("malformed matrix");
  const auto r = shape[0].get<Eigen::Index>();
  const auto c = shape[1].get<Eigen::Index>();
  if (r < 0 || c < 0 || data.size() != static_cast<std::size_t>(r * c))
    throw CorruptModelError("matrix data does not match its shape");
  Matrix m(r, c);
  std::size_t i = 0;
  for (Eigen::Index a = 0; a < r; ++a)
    for (Eigen::Index b = 0; b < c; ++b) m(a, b) = unhex(data[i++]);
  return m;
}

Vector decode_vector(const Json& j) {
  const auto& shape = at(j, "shape");
  const auto& data = at(j, "data");
  if (get<std::string>(j, "dtype") != "f64" || !shape.is_array() || shape.size() != 1 || !data.is_array())
    throw CorruptModelError("malformed vector");
  const auto n = shape[0].get<Eigen::Index>();
  if (n < 0 || data.size() != static_cast<std::size_t>(n)) throw CorruptModelError("vector data does not match its shape");
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = unhex(data[static_cast<std::size_t>(i)]);
  return v;
}

std::vector<double> decode_list(const Json& j) {
  const Vector v = decode_vector(j);
  return std::vector<double>(v.data(), v.data() + v.size());
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string checksum(const Json& body) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(fnv1a(body.dump())));
  return buf;
}

Json encode_body(const MsfaModel& m) {
  Json b;
  b["lag"] = m.lag;
  b["channels"] = m.channels;
  b["channel_names"] = m.channel_names;
  b["alpha"] = hex(m.alpha);
  b["window"] = m.window;
  Json meta = Json::object();
  for (const auto& [k, v] : m.metadata) meta[k] = v;
  b["metadata"] = meta;

  const auto& mx = m.mixture;
  Json mj;
  mj["dimension"] = mx.dimension;
  Json cfg;
  cfg["max_iter"] = mx.config.max_iter;
  cfg["tol"] = hex(mx.config.tol);
  cfg["reg_relative"] = hex(mx.config.reg_relative);
  cfg["seed"] = mx.config.seed;
  cfg["init_restarts"] = mx.config.init_restarts;
  cfg["kmeans_iter"] = mx.config.kmeans_iter;
  cfg["max_collapses"] = mx.config.max_collapses;
  mj["config"] = cfg;
  mj["converged"] = mx.converged;
  mj["fit_log"] = encode(mx.fit_log);
  mj["effective_counts"] = encode(mx.effective_counts);
  mj["events"] = mx.events;
  Json comps = Json::array();
  for (const auto& c : mx.components) {
    Json cj;
    cj["weight"] = hex(c.weight);
    cj["mean"] = encode(c.mean);
    cj["covariance"] = encode(c.covariance);
    comps.push_back(std::move(cj));
  }
  mj["components"] = std::move(comps);
  b["mixture"] = std::move(mj);

  Json pats = Json::array();
  for (const auto& p : m.patterns) {
    Json sj;
    sj["pattern_id"] = p.sfa.pattern_id;
    sj["center"] = encode(p.sfa.center);
    sj["scale"] = encode(p.sfa.scale);
    sj["w_slow"] = encode(p.sfa.w_slow);
    sj["w_resid"] = encode(p.sfa.w_resid);
    sj["slowness"] = encode(p.sfa.slowness);
    sj["dropped"] = p.sfa.dropped;
    sj["knee_degenerate"] = p.sfa.knee_degenerate;
    const auto& l = p.limits;
    Json lj;
    lj["alpha"] = hex(l.alpha);
    lj["count"] = l.count;
    lj["t2_s"] = {{"g", hex(l.t2_s.g)}, {"dof", hex(l.t2_s.dof)}};
    lj["t2_r"] = {{"g", hex(l.t2_r.g)}, {"dof", hex(l.t2_r.dof)}};
    lj["d2_s"] = {{"dim", hex(l.d2_s.dim)}, {"count", hex(l.d2_s.count)}};
    lj["d2_r"] = {{"dim", hex(l.d2_r.dim)}, {"count", hex(l.d2_r.count)}};
    lj["lambda_s"] = encode(l.lambda_s);
    lj["lambda_r"] = encode(l.lambda_r);
    lj["limit"] = encode(std::vector<double>(l.limit.begin(), l.limit.end()));
    Json pj;
    pj["sfa"] = std::move(sj);
    pj["limits"] = std::move(lj);
    pats.push_back(std::move(pj));
  }
  b["patterns"] = std::move(pats);
  return b;
}

MsfaModel decode_body(const Json& b) {
  MsfaModel m;
  m.lag = get<std::size_t>(b, "lag");
  m.channels = get<std::size_t>(b, "channels");
  m.channel_names = get<std::vector<std::string>>(b, "channel_names");
  m.alpha = unhex(at(b, "alpha"));
  m.window = get<std::size_t>(b, "window");
  for (const auto& [k, v] : at(b, "metadata").items()) {
    if (!v.is_string()) throw CorruptModelError("metadata values must be strings");
    m.metadata[k] = v.get<std::string>();
  }

  const auto& mj = at(b, "mixture");
  auto& mx = m.mixture;
  mx.dimension = get<std::size_t>(mj, "dimension");
  const auto& cfg = at(mj, "config");
  mx.config.max_iter = get<std::size_t>(cfg, "max_iter");
  mx.config.tol = unhex(at(cfg, "tol"));
  mx.config.reg_relative = unhex(at(cfg, "reg_relative"));
  mx.config.seed = get<std::uint64_t>(cfg, "seed");
  mx.config.init_restarts = get<std::size_t>(cfg, "init_restarts");
  mx.config.kmeans_iter = get<std::size_t>(cfg, "kmeans_iter");
  mx.config.max_collapses = get<std::size_t>(cfg, "max_collapses");
  mx.converged = get<bool>(mj, "converged");
  mx.fit_log = decode_list(at(mj, "fit_log"));
  mx.effective_counts = decode_list(at(mj, "effective_counts"));
  mx.events = get<std::vector<std::string>>(mj, "events");
  for (const auto& cj : at(mj, "components")) {
    GaussianComponent c;
    c.weight = unhex(at(cj, "weight"));
    c.mean = decode_vector(at(cj, "mean"));
    c.covariance = decode_matrix(at(cj, "covariance"));
    mx.components.push_back(std::move(c));
  }

  for (const auto& pj : at(b, "patterns")) {
    PatternModel p;
    const auto& sj = at(pj, "sfa");
    p.sfa.pattern_id = get<std::size_t>(sj, "pattern_id");
    p.sfa.center = decode_vector(at(sj, "center"));
    p.sfa.scale = decode_vector(at(sj, "scale"));
    p.sfa.w_slow = decode_matrix(at(sj, "w_slow"));
    p.sfa.w_resid = decode_matrix(at(sj, "w_resid"));
    p.sfa.slowness = decode_vector(at(sj, "slowness"));
    p.sfa.dropped = get<std::size_t>(sj, "dropped");
    p.sfa.knee_degenerate = get<bool>(sj, "knee_degenerate");
    const auto& lj = at(pj, "limits");
    auto& l = p.limits;
    l.alpha = unhex(at(lj, "alpha"));
    l.count = get<std::size_t>(lj, "count");
    l.t2_s = {unhex(at(at(lj, "t2_s"), "g")), unhex(at(at(lj, "t2_s"), "dof"))};
    l.t2_r = {unhex(at(at(lj, "t2_r"), "g")), unhex(at(at(lj, "t2_r"), "dof"))};
    l.d2_s = {unhex(at(at(lj, "d2_s"), "dim")), unhex(at(at(lj, "d2_s"), "count"))};
    l.d2_r = {unhex(at(at(lj, "d2_r"), "dim")), unhex(at(at(lj, "d2_r"), "count"))};
    l.lambda_s = decode_matrix(at(lj, "lambda_s"));
    l.lambda_r = decode_matrix(at(lj, "lambda_r"));
    const auto lim = decode_list(at(lj, "limit"));
    if (lim.size() != 4) throw CorruptModelError("limit array must have 4 entries");
    std::copy(lim.begin(), lim.end(), l.limit.begin());
    m.patterns.push_back(std::move(p));
  }
  try {
    m.validate();
  } catch (const InputError& e) {
    throw CorruptModelError(std::string("inconsistent model: ") + e.what());
  }
  return m;
}

}  // namespace

std::string serialize_model(const MsfaModel& model) {
  model.validate();
  Json body = encode_body(model);
  Json doc;
  doc["format"] = kFormat;
  doc["schema_version"] = kModelSchemaVersion;
  doc["checksum"] = checksum(body);
  doc["body"] = std::move(body);
  return doc.dump(1) + "\n";
}

MsfaModel deserialize_model(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CorruptModelError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("format") || doc["format"] != kFormat)
    throw CorruptModelError("not an MSFA model file");
  if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer())
    throw CorruptModelError("model file has no schema version");
  const auto version = doc["schema_version"].get<long long>();
  if (version != kModelSchemaVersion) {
    std::ostringstream msg;
    msg << "model schema version " << version << " is not supported (expected " << kModelSchemaVersion << ")";
    throw ModelVersionError(msg.str());
  }
  if (!doc.contains("body") || !doc.contains("checksum") || !doc["checksum"].is_string())
    throw CorruptModelError("model file is missing its body or checksum");
  if (checksum(doc["body"]) != doc["checksum"].get<std::string>())
    throw ChecksumError("model checksum mismatch; the file was modified or damaged");
  try {
    return decode_body(doc["body"]);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptModelError(std::string("malformed model body: ") + e.what());
  }
}

void save_model(const MsfaModel& model, const std::string& path) {
  const auto text = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write model file '" + path + "'");
  out << text;
  if (!out) throw InputError("write failed for model file '" + path + "'");
}

MsfaModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

namespace {

bool same(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

bool models_equal(const MsfaModel& a, const MsfaModel& b) {
  if (a.lag != b.lag || a.channels != b.channels || a.channel_names != b.channel_names ||
      !same(a.alpha, b.alpha) || a.window != b.window || a.metadata != b.metadata)
    return false;
  const auto& x = a.mixture;
  const auto& y = b.mixture;
  if (x.dimension != y.dimension || x.converged != y.converged || !same(x.fit_log, y.fit_log) ||
      !same(x.effective_counts, y.effective_counts) || x.events != y.events ||
      x.config.max_iter != y.config.max_iter || !same(x.config.tol, y.config.tol) ||
      !same(x.config.reg_relative, y.config.reg_relative) || x.config.seed != y.config.seed ||
      x.config.init_restarts != y.config.init_restarts || x.config.kmeans_iter != y.config.kmeans_iter ||
      x.config.max_collapses != y.config.max_collapses || x.components.size() != y.components.size())
    return false;
  for (std::size_t g = 0; g < x.components.size(); ++g) {
    const auto& c = x.components[g];
    const auto& d = y.components[g];
    if (!same(c.weight, d.weight) || !bit_equal(c.mean, d.mean) || !bit_equal(c.covariance, d.covariance))
      return false;
  }
  if (a.patterns.size() != b.patterns.size()) return false;
  for (std::size_t g = 0; g < a.patterns.size(); ++g) {
    const auto& p = a.patterns[g];
    const auto& q = b.patterns[g];
    if (p.sfa.pattern_id != q.sfa.pattern_id || !bit_equal(p.sfa.center, q.sfa.center) ||
        !bit_equal(p.sfa.scale, q.sfa.scale) || !bit_equal(p.sfa.w_slow, q.sfa.w_slow) ||
        !bit_equal(p.sfa.w_resid, q.sfa.w_resid) || !bit_equal(p.sfa.slowness, q.sfa.slowness) ||
        p.sfa.dropped != q.sfa.dropped || p.sfa.knee_degenerate != q.sfa.knee_degenerate)
      return false;
    const auto& l = p.limits;
    const auto& r = q.limits;
    if (!same(l.alpha, r.alpha) || l.count != r.count || !same(l.t2_s.g, r.t2_s.g) ||
        !same(l.t2_s.dof, r.t2_s.dof) || !same(l.t2_r.g, r.t2_r.g) || !same(l.t2_r.dof, r.t2_r.dof) ||
        !same(l.d2_s.dim, r.d2_s.dim) || !same(l.d2_s.count, r.d2_s.count) ||
        !same(l.d2_r.dim, r.d2_r.dim) || !same(l.d2_r.count, r.d2_r.count) ||
        !bit_equal(l.lambda_s, r.lambda_s) || !bit_equal(l.lambda_r, r.lambda_r))
      return false;
    for (std::size_t i = 0; i < 4; ++i)
      if (!same(l.limit[i], r.limit[i])) return false;
  }
  return true;
}

}  // namespace msfa
