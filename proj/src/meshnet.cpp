#include "elemantra/meshnet.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <sstream>

#include "elemantra/error.hpp"
#include "elemantra/io.hpp"

namespace elemantra::mesh {

namespace {

std::vector<std::string> split_topic(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == '/') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

LinkModel link_from_json(const nlohmann::json& j, const LinkModel& base) {
  LinkModel l = base;
  if (j.contains("latency_s")) l.latency_min_s = l.latency_max_s = j["latency_s"].get<double>();
  if (j.contains("latency_min_s")) l.latency_min_s = j["latency_min_s"].get<double>();
  if (j.contains("latency_max_s")) l.latency_max_s = j["latency_max_s"].get<double>();
  if (j.contains("loss")) l.loss = j["loss"].get<double>();
  return l;
}

}  // namespace

bool valid_topic(const std::string& topic) {
  if (topic.empty()) return false;
  for (const auto& seg : split_topic(topic)) {
    if (seg.empty() || seg.find('+') != std::string::npos || seg.find('#') != std::string::npos) return false;
  }
  return true;
}

bool valid_pattern(const std::string& pattern) {
  if (pattern.empty()) return false;
  for (const auto& seg : split_topic(pattern)) {
    if (seg.empty() || seg.find('#') != std::string::npos) return false;
    if (seg.find('+') != std::string::npos && seg != "+") return false;
  }
  return true;
}

bool topic_matches(const std::string& pattern, const std::string& topic) {
  const auto p = split_topic(pattern);
  const auto t = split_topic(topic);
  if (p.size() != t.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] != "+" && p[i] != t[i]) return false;
  }
  return true;
}

namespace topics {
std::string frame(const std::string& pn_id) { return "elemantra/pn/" + pn_id + "/frame"; }
std::string command(const std::string& pn_id) { return "elemantra/cn/cmd/" + pn_id; }
std::string status(const std::string& pn_id) { return "elemantra/pn/" + pn_id + "/status"; }
}  // namespace topics

void LinkModel::validate() const {
  if (!(latency_min_s >= 0.0 && latency_max_s >= latency_min_s)) {
    throw InvalidConfig("LinkModel: need 0 <= latency_min_s <= latency_max_s");
  }
  if (!(loss >= 0.0 && loss <= 1.0)) throw InvalidConfig("LinkModel: loss outside [0, 1]");
}

void FailoverConfig::validate() const {
  if (broker_priority.empty()) throw InvalidConfig("FailoverConfig: empty broker priority list");
  std::set<std::string> seen(broker_priority.begin(), broker_priority.end());
  if (seen.size() != broker_priority.size()) throw InvalidConfig("FailoverConfig: duplicate broker id");
  if (!(heartbeat_interval_s > 0.0)) throw InvalidConfig("FailoverConfig: heartbeat_interval_s must be positive");
  if (miss_threshold < 1) throw InvalidConfig("FailoverConfig: miss_threshold must be >= 1");
  if (!(connect_timeout_s > 0.0)) throw InvalidConfig("FailoverConfig: connect_timeout_s must be positive");
}

void MeshConfig::validate() const {
  default_link.validate();
  for (const auto& [id, l] : client_links) l.validate();
  failover.validate();
  for (const auto& p : partitions) {
    if (!(p.t_end_s >= p.t_start_s)) throw InvalidConfig("MeshConfig: partition ends before it starts");
  }
  const std::set<std::string> brokers(failover.broker_priority.begin(), failover.broker_priority.end());
  for (const auto& o : outages) {
    if (brokers.count(o.broker) == 0) throw InvalidConfig("MeshConfig: outage for unknown broker " + o.broker);
    if (o.t_revive_s && *o.t_revive_s < o.t_kill_s) throw InvalidConfig("MeshConfig: revive before kill");
  }
  if (!(retry_interval_s > 0.0)) throw InvalidConfig("MeshConfig: retry_interval_s must be positive");
  if (max_retries < 0) throw InvalidConfig("MeshConfig: negative max_retries");
  if (outbox_cap == 0) throw InvalidConfig("MeshConfig: outbox_cap must be positive");
}

double MeshConfig::max_latency_s() const {
  double m = default_link.latency_max_s;
  for (const auto& [id, l] : client_links) m = std::max(m, l.latency_max_s);
  return m;
}

MeshConfig parse_mesh_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("network config: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
  MeshConfig c;
  try {
    if (j.contains("default_link")) c.default_link = link_from_json(j["default_link"], c.default_link);
    if (j.contains("client_links")) {
      for (const auto& [id, jl] : j["client_links"].items()) c.client_links[id] = link_from_json(jl, c.default_link);
    }
    for (const auto& jp : j.value("partitions", nlohmann::json::array())) {
      Partition p;
      p.t_start_s = jp.at("t_start_s").get<double>();
      p.t_end_s = jp.at("t_end_s").get<double>();
      for (const auto& n : jp.at("nodes")) p.nodes.insert(n.get<std::string>());
      c.partitions.push_back(std::move(p));
    }
    if (j.contains("failover")) {
      const auto& jf = j["failover"];
      if (jf.contains("broker_priority")) c.failover.broker_priority = jf["broker_priority"].get<std::vector<std::string>>();
      c.failover.heartbeats = jf.value("heartbeats", c.failover.heartbeats);
      c.failover.heartbeat_interval_s = jf.value("heartbeat_interval_s", c.failover.heartbeat_interval_s);
      c.failover.miss_threshold = jf.value("miss_threshold", c.failover.miss_threshold);
      c.failover.connect_timeout_s = jf.value("connect_timeout_s", c.failover.connect_timeout_s);
    }
    for (const auto& jo : j.value("outages", nlohmann::json::array())) {
      BrokerOutage o;
      o.broker = jo.at("broker").get<std::string>();
      o.t_kill_s = jo.at("t_kill_s").get<double>();
      if (jo.contains("t_revive_s")) o.t_revive_s = jo["t_revive_s"].get<double>();
      c.outages.push_back(std::move(o));
    }
    c.retry_interval_s = j.value("retry_interval_s", c.retry_interval_s);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.outbox_cap = j.value("outbox_cap", c.outbox_cap);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("network config: ") + e.what(), 0);
  }
  c.validate();
  return c;
}

MeshConfig load_mesh_config(const std::filesystem::path& path) { return parse_mesh_config(io::read_file(path)); }

std::string to_string(TraceEvent e) {
  switch (e) {
    case TraceEvent::Publish:
      return "publish";
    case TraceEvent::Drop:
      return "drop";
    case TraceEvent::Deliver:
      return "deliver";
    case TraceEvent::Retry:
      return "retry";
    case TraceEvent::Failover:
      return "failover";
  }
  return "?";
}

std::string to_json_line(const TraceRecord& r) {
  nlohmann::ordered_json j;
  j["t"] = r.t_s;
  j["msg_id"] = r.msg_id;
  j["topic"] = r.topic;
  j["from"] = r.from;
  j["to"] = r.to;
  j["event"] = to_string(r.event);
  return j.dump();
}

// ---------------------------------------------------------------------------

Network::Network(MeshConfig config) : config_(std::move(config)), rng_(config_.seed) {
  config_.validate();
  for (const auto& id : config_.failover.broker_priority) {
    brokers_[id] = Broker{id, true, {}};
    broker_ids_.insert(id);
  }
  if (config_.failover.heartbeats) {
    for (const auto& id : config_.failover.broker_priority) {
      schedule(Event{0.0, 0, EventKind::HeartbeatTick, id, 0, {}});
    }
  }
  for (const auto& o : config_.outages) {
    schedule(Event{o.t_kill_s, 0, EventKind::Kill, o.broker, 0, {}});
    if (o.t_revive_s) schedule(Event{*o.t_revive_s, 0, EventKind::Revive, o.broker, 0, {}});
  }
}

void Network::schedule(Event e) {
  e.seq = next_seq_++;
  events_.push(std::move(e));
}

void Network::add_client(const std::string& id) {
  if (id.empty() || broker_ids_.count(id) != 0) throw InvalidInput("add_client: invalid or broker id '" + id + "'");
  if (clients_.count(id) != 0) throw InvalidInput("add_client: duplicate client '" + id + "'");
  Client c;
  c.id = id;
  c.broker = config_.failover.broker_priority.front();
  c.previous_broker = c.broker;
  clients_[id] = c;
  if (brokers_[c.broker].alive) brokers_[c.broker].subscriptions[id];
  if (config_.failover.heartbeats) {
    const double interval = config_.failover.heartbeat_interval_s;
    const double k = std::floor(now_ / interval - 0.5) + 1.0;
    schedule(Event{(k + 0.5) * interval, 0, EventKind::ClientCheck, id, 0, {}});
  }
}

void Network::subscribe(const std::string& client, const std::string& pattern) {
  auto it = clients_.find(client);
  if (it == clients_.end()) throw InvalidInput("subscribe: unknown client '" + client + "'");
  if (!valid_pattern(pattern)) throw InvalidInput("subscribe: invalid pattern '" + pattern + "'");
  Client& c = it->second;
  if (std::find(c.patterns.begin(), c.patterns.end(), pattern) == c.patterns.end()) c.patterns.push_back(pattern);
  if (c.mode == ClientMode::Connected) {
    Broker& b = brokers_[c.broker];
    if (b.alive) b.subscriptions[client] = c.patterns;
  }
}

std::uint64_t Network::publish(const std::string& client, const std::string& topic, std::string payload, Qos qos) {
  auto it = clients_.find(client);
  if (it == clients_.end()) throw InvalidInput("publish: unknown client '" + client + "'");
  if (!valid_topic(topic)) throw InvalidInput("publish: invalid topic '" + topic + "'");
  Client& c = it->second;

  Message m;
  m.msg_id = next_msg_id_++;
  m.topic = topic;
  m.payload = std::move(payload);
  m.qos = qos;
  m.publish_time_s = now_;
  m.publisher = client;
  record(TraceEvent::Publish, m, client, c.mode == ClientMode::Connected ? c.broker : std::string());

  if (qos == Qos::AtLeastOnce) {
    OutEntry e;
    e.id = next_entry_id_++;
    e.sender = client;
    e.queue_key = "c|" + client + "|" + topic;
    e.message = m;
    enqueue_out(std::move(e));
  } else if (c.mode == ClientMode::Connected) {
    transmit(Packet{PacketKind::Publish, client, c.broker, m, 0, 0, {}});
  } else {
    c.deferred_at_most_once.push_back(m);
  }
  enforce_outbox_cap(client);
  return m.msg_id;
}

bool Network::link_up(const std::string& a, const std::string& b) const {
  for (const auto& p : config_.partitions) {
    if (now_ >= p.t_start_s && now_ < p.t_end_s && (p.nodes.count(a) != 0 || p.nodes.count(b) != 0)) return false;
  }
  return true;
}

const LinkModel& Network::link_for(const std::string& client) const {
  auto it = config_.client_links.find(client);
  return it != config_.client_links.end() ? it->second : config_.default_link;
}

void Network::transmit(Packet packet) {
  const bool carries_message = packet.kind == PacketKind::Publish || packet.kind == PacketKind::Forward;
  const std::string& client = broker_ids_.count(packet.from) != 0 ? packet.to : packet.from;
  const LinkModel& link = link_for(client);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double draw = unit(rng_);
  if (!link_up(packet.from, packet.to) || draw < link.loss) {
    if (carries_message) record(TraceEvent::Drop, packet.message, packet.from, packet.to);
    return;
  }
  double latency = link.latency_min_s;
  if (link.latency_max_s > link.latency_min_s) {
    latency = std::uniform_real_distribution<double>(link.latency_min_s, link.latency_max_s)(rng_);
  }
  auto& last = last_arrival_[{packet.from, packet.to}];
  const double arrival = std::max(now_ + latency, last);
  last = arrival;
  Event e;
  e.t_s = arrival;
  e.kind = EventKind::Arrive;
  e.node = packet.to;
  e.packet = std::move(packet);
  schedule(std::move(e));
}

void Network::enqueue_out(OutEntry entry) {
  const std::string key = entry.queue_key;
  const std::uint64_t id = entry.id;
  entries_[id] = std::move(entry);
  auto& q = queues_[key];
  q.push_back(id);
  if (q.size() == 1) send_entry(entries_[id]);
}

void Network::pump_queue(const std::string& queue_key) {
  auto it = queues_.find(queue_key);
  if (it == queues_.end() || it->second.empty()) return;
  OutEntry& head = entries_.at(it->second.front());
  if (!head.in_flight) send_entry(head);
}

void Network::send_entry(OutEntry& entry) {
  std::string receiver = entry.receiver;
  PacketKind kind = PacketKind::Forward;
  if (auto cit = clients_.find(entry.sender); cit != clients_.end()) {
    if (cit->second.mode != ClientMode::Connected) {
      entry.in_flight = false;
      return;
    }
    receiver = cit->second.broker;
    kind = PacketKind::Publish;
  }
  entry.in_flight = true;
  entry.send_tag += 1;
  transmit(Packet{kind, entry.sender, receiver, entry.message, entry.id, 0, {}});
  Event e;
  e.t_s = now_ + config_.retry_interval_s;
  e.kind = EventKind::Retry;
  e.node = entry.sender;
  e.ref = entry.id;
  e.packet.attempt_tag = entry.send_tag;
  schedule(std::move(e));
}

void Network::finish_entry(std::uint64_t entry_id, bool delivered, const std::string& why) {
  auto it = entries_.find(entry_id);
  if (it == entries_.end()) return;
  const OutEntry entry = it->second;
  entries_.erase(it);
  auto& q = queues_[entry.queue_key];
  const bool was_head = !q.empty() && q.front() == entry_id;
  q.erase(std::remove(q.begin(), q.end(), entry_id), q.end());
  if (!delivered) {
    record(TraceEvent::Drop, entry.message, entry.sender, entry.receiver);
    anomalies_.push_back("msg " + std::to_string(entry.message.msg_id) + " on " + entry.message.topic + " from " +
                         entry.sender + " abandoned: " + why);
  }
  if (q.empty()) {
    queues_.erase(entry.queue_key);
  } else if (was_head) {
    pump_queue(entry.queue_key);
  }
}

std::size_t Network::buffered_count(const std::string& client) const {
  std::size_t n = clients_.at(client).deferred_at_most_once.size();
  for (const auto& [id, e] : entries_) {
    if (e.sender == client) ++n;
  }
  return n;
}

void Network::enforce_outbox_cap(const std::string& client) {
  Client& c = clients_.at(client);
  while (buffered_count(client) > config_.outbox_cap) {
    // Oldest buffered message by id, excluding anything already on the wire.
    std::optional<std::uint64_t> oldest_entry;
    std::uint64_t oldest_msg = UINT64_MAX;
    for (const auto& [id, e] : entries_) {
      if (e.sender == client && !e.in_flight && e.message.msg_id < oldest_msg) {
        oldest_msg = e.message.msg_id;
        oldest_entry = id;
      }
    }
    const bool deferred_older = !c.deferred_at_most_once.empty() && c.deferred_at_most_once.front().msg_id < oldest_msg;
    if (deferred_older || !oldest_entry) {
      if (c.deferred_at_most_once.empty()) break;
      const Message m = c.deferred_at_most_once.front();
      c.deferred_at_most_once.pop_front();
      record(TraceEvent::Drop, m, client, "");
      anomalies_.push_back("outbox full at " + client + ": dropped msg " + std::to_string(m.msg_id));
    } else {
      finish_entry(*oldest_entry, false, "outbox full");
    }
  }
}

std::vector<Delivery> Network::advance(double dt_s) {
  if (!(dt_s > 0.0)) throw InvalidInput("advance: dt must be positive");
  return advance_to(now_ + dt_s);
}

std::vector<Delivery> Network::advance_to(double t_s) {
  std::vector<Delivery> out;
  while (!events_.empty() && events_.top().t_s <= t_s) {
    Event e = events_.top();
    events_.pop();
    now_ = std::max(now_, e.t_s);
    handle(e, out);
  }
  now_ = std::max(now_, t_s);
  return out;
}

std::optional<double> Network::next_event_time() const {
  if (events_.empty()) return std::nullopt;
  return events_.top().t_s;
}

void Network::handle(const Event& e, std::vector<Delivery>& out) {
  switch (e.kind) {
    case EventKind::Arrive:
      on_arrive(e.packet, out);
      break;
    case EventKind::Retry:
      on_retry(e.ref, e.packet.attempt_tag);
      break;
    case EventKind::HeartbeatTick:
      on_heartbeat_tick(e.node);
      break;
    case EventKind::ClientCheck:
      on_client_check(e.node);
      break;
    case EventKind::ConnectTimeout:
      on_connect_timeout(e.node, e.ref);
      break;
    case EventKind::Kill:
      kill_broker(e.node);
      break;
    case EventKind::Revive:
      revive_broker(e.node);
      break;
  }
}

void Network::on_arrive(const Packet& p, std::vector<Delivery>& out) {
  if (auto bit = brokers_.find(p.to); bit != brokers_.end()) {
    Broker& b = bit->second;
    if (!b.alive) {
      if (p.kind == PacketKind::Publish) record(TraceEvent::Drop, p.message, p.from, p.to);
      return;
    }
    switch (p.kind) {
      case PacketKind::Publish:
        if (p.message.qos == Qos::AtLeastOnce) transmit(Packet{PacketKind::Ack, b.id, p.from, {}, p.entry_id, 0, {}});
        route(b, p.message);
        break;
      case PacketKind::Ack:
        if (auto it = entries_.find(p.entry_id); it != entries_.end() && it->second.sender == b.id) {
          finish_entry(p.entry_id, true);
        }
        break;
      case PacketKind::Connect:
        b.subscriptions[p.from] = p.subscriptions;
        transmit(Packet{PacketKind::ConnAck, b.id, p.from, {}, 0, p.attempt_tag, {}});
        break;
      default:
        break;
    }
    return;
  }

  auto cit = clients_.find(p.to);
  if (cit == clients_.end()) return;
  Client& c = cit->second;
  switch (p.kind) {
    case PacketKind::Forward:
      record(TraceEvent::Deliver, p.message, p.from, c.id);
      out.push_back(Delivery{now_, c.id, p.message});
      if (p.message.qos == Qos::AtLeastOnce) transmit(Packet{PacketKind::Ack, c.id, p.from, {}, p.entry_id, 0, {}});
      break;
    case PacketKind::Ack:
      if (auto it = entries_.find(p.entry_id); it != entries_.end() && it->second.sender == c.id) {
        finish_entry(p.entry_id, true);
      }
      break;
    case PacketKind::Heartbeat:
      if (c.mode == ClientMode::Connected && p.from == c.broker) c.heard_since_check = true;
      break;
    case PacketKind::ConnAck:
      if (c.mode == ClientMode::Connecting && p.from == c.broker && p.attempt_tag == c.connect_attempt) {
        c.mode = ClientMode::Connected;
        c.misses = 0;
        c.heard_since_check = true;
        transitions_.push_back(BrokerTransition{now_, c.id, c.previous_broker, c.broker});
        // Re-send every pending head and anything deferred while offline.
        const std::string prefix = "c|" + c.id + "|";
        std::vector<std::string> keys;
        for (const auto& [key, q] : queues_) {
          if (key.rfind(prefix, 0) == 0 && !q.empty()) keys.push_back(key);
        }
        for (const auto& key : keys) {
          OutEntry& head = entries_.at(queues_.at(key).front());
          head.retries = 0;
          if (head.in_flight || head.send_tag > 0) record(TraceEvent::Retry, head.message, c.id, c.broker);
          send_entry(head);
        }
        while (!c.deferred_at_most_once.empty()) {
          transmit(Packet{PacketKind::Publish, c.id, c.broker, c.deferred_at_most_once.front(), 0, 0, {}});
          c.deferred_at_most_once.pop_front();
        }
      }
      break;
    default:
      break;
  }
}

void Network::route(Broker& b, const Message& m) {
  for (const auto& [client, patterns] : b.subscriptions) {
    const bool match = std::any_of(patterns.begin(), patterns.end(),
                                   [&](const std::string& p) { return topic_matches(p, m.topic); });
    if (!match) continue;
    if (m.qos == Qos::AtMostOnce) {
      transmit(Packet{PacketKind::Forward, b.id, client, m, 0, 0, {}});
    } else {
      OutEntry e;
      e.id = next_entry_id_++;
      e.sender = b.id;
      e.receiver = client;
      e.queue_key = "b|" + b.id + "|" + client + "|" + m.topic;
      e.message = m;
      enqueue_out(std::move(e));
    }
  }
}

void Network::on_retry(std::uint64_t entry_id, std::uint64_t send_tag) {
  auto it = entries_.find(entry_id);
  if (it == entries_.end() || it->second.send_tag != send_tag) return;
  OutEntry& e = it->second;
  if (auto cit = clients_.find(e.sender); cit != clients_.end() && cit->second.mode != ClientMode::Connected) {
    e.in_flight = false;  // resent on reconnection
    return;
  }
  if (e.retries >= config_.max_retries) {
    finish_entry(entry_id, false, "retries exhausted");
    return;
  }
  e.retries += 1;
  record(TraceEvent::Retry, e.message, e.sender,
         clients_.count(e.sender) != 0 ? clients_.at(e.sender).broker : e.receiver);
  send_entry(e);
}

void Network::on_heartbeat_tick(const std::string& broker) {
  schedule(Event{now_ + config_.failover.heartbeat_interval_s, 0, EventKind::HeartbeatTick, broker, 0, {}});
  if (!brokers_.at(broker).alive) return;
  for (const auto& [id, c] : clients_) {
    if (c.mode == ClientMode::Connected && c.broker == broker) {
      transmit(Packet{PacketKind::Heartbeat, broker, id, {}, 0, 0, {}});
    }
  }
}

void Network::on_client_check(const std::string& client) {
  schedule(Event{now_ + config_.failover.heartbeat_interval_s, 0, EventKind::ClientCheck, client, 0, {}});
  Client& c = clients_.at(client);
  if (c.mode != ClientMode::Connected) return;
  c.misses = c.heard_since_check ? 0 : c.misses + 1;
  c.heard_since_check = false;
  if (c.misses >= config_.failover.miss_threshold) {
    c.previous_broker = c.broker;
    start_connect(c);
  }
}

void Network::start_connect(Client& c) {
  const auto& prio = config_.failover.broker_priority;
  const auto cur = std::find(prio.begin(), prio.end(), c.broker);
  const std::size_t idx = cur == prio.end() ? 0 : static_cast<std::size_t>(cur - prio.begin());
  c.mode = ClientMode::Connecting;
  c.priority_index = (idx + 1) % prio.size();
  c.broker = prio[c.priority_index];
  c.connect_attempt += 1;
  Message marker;
  marker.topic = "";
  record(TraceEvent::Failover, marker, c.id, c.broker);
  transmit(Packet{PacketKind::Connect, c.id, c.broker, {}, 0, c.connect_attempt, c.patterns});
  schedule(Event{now_ + config_.failover.connect_timeout_s, 0, EventKind::ConnectTimeout, c.id, c.connect_attempt, {}});
}

void Network::on_connect_timeout(const std::string& client, std::uint64_t attempt) {
  Client& c = clients_.at(client);
  if (c.mode == ClientMode::Connecting && c.connect_attempt == attempt) start_connect(c);
}

void Network::kill_broker(const std::string& broker) {
  auto it = brokers_.find(broker);
  if (it == brokers_.end()) throw InvalidInput("kill_broker: unknown broker '" + broker + "'");
  it->second.alive = false;
  it->second.subscriptions.clear();
  std::vector<std::uint64_t> lost;
  for (const auto& [id, e] : entries_) {
    if (e.sender == broker) lost.push_back(id);
  }
  for (auto id : lost) {
    const OutEntry& e = entries_.at(id);
    record(TraceEvent::Drop, e.message, broker, e.receiver);
    queues_.erase(e.queue_key);
    entries_.erase(id);
  }
  anomalies_.push_back("broker " + broker + " down at t=" + io::format_real(now_));
}

void Network::revive_broker(const std::string& broker) {
  auto it = brokers_.find(broker);
  if (it == brokers_.end()) throw InvalidInput("revive_broker: unknown broker '" + broker + "'");
  it->second.alive = true;
}

void Network::record(TraceEvent ev, const Message& m, const std::string& from, const std::string& to) {
  trace_.push_back(TraceRecord{now_, m.msg_id, m.topic, from, to, ev});
}

std::optional<std::string> Network::connected_broker(const std::string& client) const {
  const Client& c = clients_.at(client);
  if (c.mode != ClientMode::Connected) return std::nullopt;
  return c.broker;
}

BrokerState Network::broker_state(const std::string& broker) const {
  const Broker& b = brokers_.at(broker);
  BrokerState s;
  s.id = b.id;
  s.alive = b.alive;
  s.subscriptions = b.subscriptions;
  for (const auto& [id, e] : entries_) {
    if (e.sender != broker) continue;
    ++s.in_flight;
    s.retry_counters[e.message.msg_id] = e.retries;
  }
  return s;
}

}  // namespace elemantra::mesh
