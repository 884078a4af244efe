#include "tubeharq/protocol.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "tubeharq/util.hpp"

namespace tubeharq {

using nlohmann::json;

Transport transport_from_string(const std::string& s) {
  if (s == "package") return Transport::package;
  if (s == "block") return Transport::block;
  throw std::invalid_argument("unknown transport: " + s);
}

std::string to_string(Transport t) {
  return t == Transport::package ? "package" : "block";
}

void validate_config(const SessionConfig& config) {
  if (config.rounds < 1) throw std::invalid_argument("config: rounds must be >= 1");
  if (config.request_budget < 1)
    throw std::invalid_argument("config: request_budget must be >= 1");
  if (config.compute_budget < 0)
    throw std::invalid_argument("config: compute_budget must be >= 0");
  if (config.u_init != 0 && config.u_init != 1)
    throw std::invalid_argument("config: u_init must be 0 or 1");
  if (config.u_init > config.compute_budget)
    throw std::invalid_argument("config: u_init exceeds compute_budget");
  if (!(config.f_init >= 0.0 && config.f_init <= 1.0))
    throw std::invalid_argument("config: f_init must be in [0, 1]");
  if (config.c_init < 0 || config.c_rtt < 0 || config.c_pkt < 0 || config.c_inp < 0)
    throw std::invalid_argument("config: time costs must be >= 0");
  if (!(config.tau_trig >= 0.0))
    throw std::invalid_argument("config: tau_trig must be >= 0");
}

AvailabilityState::AvailabilityState(const PackageCatalog& catalog)
    : catalog_(&catalog),
      delivered_(static_cast<std::size_t>(catalog.universe.total_blocks()), 0) {
  uncovered_.reserve(catalog.packages.size());
  for (const Package& p : catalog.packages) uncovered_.push_back(p.size);
}

int AvailabilityState::missing_count() const {
  return catalog_->universe.total_blocks() - delivered_count_;
}

std::vector<std::uint8_t> AvailabilityState::missing_mask() const {
  std::vector<std::uint8_t> missing(delivered_.size());
  for (std::size_t i = 0; i < delivered_.size(); ++i) missing[i] = delivered_[i] ? 0 : 1;
  return missing;
}

bool AvailabilityState::commit_block(int flat) {
  auto& slot = delivered_[static_cast<std::size_t>(flat)];
  if (slot) return false;
  slot = 1;
  ++delivered_count_;
  const int pi = catalog_->package_of[static_cast<std::size_t>(flat)];
  if (pi >= 0) --uncovered_[static_cast<std::size_t>(pi)];
  return true;
}

std::vector<int> AvailabilityState::commit_package(int package_index) {
  const Package& p = catalog_->packages[static_cast<std::size_t>(package_index)];
  std::vector<int> fresh;
  fresh.reserve(p.members.size());
  for (int flat : p.members)
    if (commit_block(flat)) fresh.push_back(flat);
  return fresh;
}

std::vector<int> initial_payload(const PackageCatalog& catalog, double f_init) {
  if (!(f_init >= 0.0 && f_init <= 1.0))
    throw std::invalid_argument("initial_payload: f_init must be in [0, 1]");
  const int target = static_cast<int>(
      std::floor(f_init * catalog.universe.total_blocks() + 1e-9));
  std::vector<int> chosen;
  int filled = 0;
  for (std::size_t i = 0; i < catalog.packages.size(); ++i) {
    const int size = catalog.packages[i].size;
    if (filled + size > target) continue;
    chosen.push_back(static_cast<int>(i));
    filled += size;
  }
  return chosen;
}

int decide_trigger(double d_hat_prev, double tau_trig, int compute_left) {
  return (d_hat_prev >= tau_trig && compute_left > 0) ? 1 : 0;
}

namespace {

std::uint64_t parse_hex64(const json& j, const char* field) {
  const std::string s = j.at(field).get<std::string>();
  return std::stoull(s, nullptr, 16);
}

json config_to_json(const SessionConfig& c) {
  return json{{"rounds", c.rounds},
              {"request_budget", c.request_budget},
              {"compute_budget", c.compute_budget},
              {"u_init", c.u_init},
              {"f_init", c.f_init},
              {"c_init", c.c_init},
              {"c_rtt", c.c_rtt},
              {"c_pkt", c.c_pkt},
              {"c_inp", c.c_inp},
              {"tau_trig", c.tau_trig},
              {"transport", to_string(c.transport)},
              {"granularity", to_string(c.granularity)}};
}

SessionConfig config_from_json(const json& j) {
  SessionConfig c;
  c.rounds = j.at("rounds").get<int>();
  c.request_budget = j.at("request_budget").get<int>();
  c.compute_budget = j.at("compute_budget").get<int>();
  c.u_init = j.at("u_init").get<int>();
  c.f_init = j.at("f_init").get<double>();
  c.c_init = j.at("c_init").get<double>();
  c.c_rtt = j.at("c_rtt").get<double>();
  c.c_pkt = j.at("c_pkt").get<double>();
  c.c_inp = j.at("c_inp").get<double>();
  c.tau_trig = j.at("tau_trig").get<double>();
  c.transport = transport_from_string(j.at("transport").get<std::string>());
  c.granularity = granularity_from_string(j.at("granularity").get<std::string>());
  return c;
}

json header_to_json(const TraceHeader& h) {
  return json{
      {"type", "header"},
      {"session_id", h.session_id},
      {"policy", h.policy},
      {"config", config_to_json(h.config)},
      {"channel",
       json{{"per", h.per},
            {"burst_len", h.burst_len},
            {"p01", h.p01},
            {"p10", h.p10},
            {"key", hex64(h.channel_key)},
            {"checksum", hex64(h.channel_checksum)}}},
      {"clip",
       json{{"seed", hex64(h.clip_seed)},
            {"catalog_hash", hex64(h.catalog_hash)},
            {"distortion_hash", hex64(h.distortion_hash)},
            {"frames", h.frames},
            {"grid_h", h.grid_h},
            {"grid_w", h.grid_w},
            {"mu", h.clip_mu},
            {"stratum", h.stratum}}},
      {"init",
       json{{"blocks", h.initial_blocks},
            {"t", h.t_init},
            {"d", h.d_init},
            {"d_hat", h.d_hat_init},
            {"proxy_raw", h.proxy_raw_init},
            {"calib_gain", h.calib_gain_init},
            {"calib_offset", h.calib_offset_init}}}};
}

TraceHeader header_from_json(const json& j) {
  TraceHeader h;
  h.session_id = j.at("session_id").get<std::string>();
  h.policy = j.at("policy").get<std::string>();
  h.config = config_from_json(j.at("config"));
  const json& ch = j.at("channel");
  h.per = ch.at("per").get<double>();
  h.burst_len = ch.at("burst_len").get<double>();
  h.p01 = ch.at("p01").get<double>();
  h.p10 = ch.at("p10").get<double>();
  h.channel_key = parse_hex64(ch, "key");
  h.channel_checksum = parse_hex64(ch, "checksum");
  const json& cl = j.at("clip");
  h.clip_seed = parse_hex64(cl, "seed");
  h.catalog_hash = parse_hex64(cl, "catalog_hash");
  h.distortion_hash = parse_hex64(cl, "distortion_hash");
  h.frames = cl.at("frames").get<int>();
  h.grid_h = cl.at("grid_h").get<int>();
  h.grid_w = cl.at("grid_w").get<int>();
  h.clip_mu = cl.at("mu").get<double>();
  h.stratum = cl.at("stratum").get<std::string>();
  const json& in = j.at("init");
  h.initial_blocks = in.at("blocks").get<int>();
  h.t_init = in.at("t").get<double>();
  h.d_init = in.at("d").get<double>();
  h.d_hat_init = in.at("d_hat").get<double>();
  h.proxy_raw_init = in.at("proxy_raw").get<double>();
  h.calib_gain_init = in.at("calib_gain").get<double>();
  h.calib_offset_init = in.at("calib_offset").get<double>();
  return h;
}

json round_to_json(const RoundRecord& r) {
  return json{{"type", "round"},
              {"round", r.round},
              {"requested", r.requested},
              {"erasures", r.erasures},
              {"channel_units", r.channel_units},
              {"budget_units", r.budget_units},
              {"delivered_packages", r.delivered_packages},
              {"committed_blocks", r.committed_blocks},
              {"u", r.u},
              {"delta_t", r.delta_t},
              {"t", r.t},
              {"proxy_raw", r.proxy_raw},
              {"d_hat", r.d_hat},
              {"d_committed", r.d_committed},
              {"d_instant", r.d_instant},
              {"calib_gain", r.calib_gain},
              {"calib_offset", r.calib_offset}};
}

RoundRecord round_from_json(const json& j) {
  RoundRecord r;
  r.round = j.at("round").get<int>();
  r.requested = j.at("requested").get<std::vector<int>>();
  r.erasures = j.at("erasures").get<std::vector<std::uint8_t>>();
  r.channel_units = j.at("channel_units").get<int>();
  r.budget_units = j.at("budget_units").get<int>();
  r.delivered_packages = j.at("delivered_packages").get<std::vector<int>>();
  r.committed_blocks = j.at("committed_blocks").get<std::vector<int>>();
  r.u = j.at("u").get<int>();
  r.delta_t = j.at("delta_t").get<double>();
  r.t = j.at("t").get<double>();
  r.proxy_raw = j.at("proxy_raw").get<double>();
  r.d_hat = j.at("d_hat").get<double>();
  r.d_committed = j.at("d_committed").get<double>();
  r.d_instant = j.at("d_instant").get<double>();
  r.calib_gain = j.at("calib_gain").get<double>();
  r.calib_offset = j.at("calib_offset").get<double>();
  return r;
}

}  // namespace

std::string trace_to_jsonl(const SessionTrace& trace) {
  std::string out = header_to_json(trace.header).dump();
  out += '\n';
  for (const RoundRecord& r : trace.rounds) {
    out += round_to_json(r).dump();
    out += '\n';
  }
  return out;
}

SessionTrace trace_from_jsonl(const std::string& text) {
  SessionTrace trace;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const std::string type = j.at("type").get<std::string>();
    if (type == "header") {
      if (have_header) throw std::runtime_error("trace: duplicate header line");
      trace.header = header_from_json(j);
      have_header = true;
    } else if (type == "round") {
      if (!have_header) throw std::runtime_error("trace: round before header");
      trace.rounds.push_back(round_from_json(j));
    } else {
      throw std::runtime_error("trace: unknown record type: " + type);
    }
  }
  if (!have_header) throw std::runtime_error("trace: missing header line");
  return trace;
}

void save_trace(const SessionTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << trace_to_jsonl(trace);
}

SessionTrace load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return trace_from_jsonl(buf.str());
}

std::string trace_to_csv(const SessionTrace& trace) {
  std::string out =
      "session_id,round,requested,channel_units,budget_units,erased,"
      "delivered_packages,committed_blocks,u,delta_t,t,proxy_raw,d_hat,"
      "d_committed,d_instant,calib_gain,calib_offset\n";
  for (const RoundRecord& r : trace.rounds) {
    int erased = 0;
    for (auto e : r.erasures) erased += e;
    out += trace.header.session_id;
    out += ',' + std::to_string(r.round);
    out += ',' + std::to_string(r.requested.size());
    out += ',' + std::to_string(r.channel_units);
    out += ',' + std::to_string(r.budget_units);
    out += ',' + std::to_string(erased);
    out += ',' + std::to_string(r.delivered_packages.size());
    out += ',' + std::to_string(r.committed_blocks.size());
    out += ',' + std::to_string(r.u);
    out += ',' + fmt_double(r.delta_t);
    out += ',' + fmt_double(r.t);
    out += ',' + fmt_double(r.proxy_raw);
    out += ',' + fmt_double(r.d_hat);
    out += ',' + fmt_double(r.d_committed);
    out += ',' + fmt_double(r.d_instant);
    out += ',' + fmt_double(r.calib_gain);
    out += ',' + fmt_double(r.calib_offset);
    out += '\n';
  }
  return out;
}

}  // namespace tubeharq
