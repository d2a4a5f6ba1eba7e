#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "elemantra/random.hpp"

namespace elemantra::mesh {

enum class Qos { AtMostOnce, AtLeastOnce };

struct Message {
  std::uint64_t msg_id = 0;
  std::string topic;
  std::string payload;
  Qos qos = Qos::AtMostOnce;
  double publish_time_s = 0.0;
  std::string publisher;
};

/// Topic names: non-empty '/'-separated segments without wildcards.
bool valid_topic(const std::string& topic);
/// Patterns may use '+' as a whole segment to match exactly one segment.
bool valid_pattern(const std::string& pattern);
bool topic_matches(const std::string& pattern, const std::string& topic);

namespace topics {
std::string frame(const std::string& pn_id);
std::string command(const std::string& pn_id);
std::string status(const std::string& pn_id);
inline const std::string kWarning = "elemantra/cn/warning";
inline const std::string kAllFrames = "elemantra/pn/+/frame";
}  // namespace topics

/// Client <-> broker link. Latency is uniform in [min, max] (fixed when equal).
struct LinkModel {
  double latency_min_s = 0.05;
  double latency_max_s = 0.05;
  double loss = 0.0;

  void validate() const;
};

/// Links touching any listed node are down during [t_start, t_end).
struct Partition {
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  std::set<std::string> nodes;
};

struct FailoverConfig {
  std::vector<std::string> broker_priority{"broker0"};
  bool heartbeats = true;
  double heartbeat_interval_s = 1.0;
  int miss_threshold = 3;
  double connect_timeout_s = 1.0;

  void validate() const;
};

struct BrokerOutage {
  std::string broker;
  double t_kill_s = 0.0;
  std::optional<double> t_revive_s;
};

struct MeshConfig {
  LinkModel default_link;
  std::map<std::string, LinkModel> client_links;
  std::vector<Partition> partitions;
  FailoverConfig failover;
  std::vector<BrokerOutage> outages;
  double retry_interval_s = 1.0;
  int max_retries = 10;
  std::size_t outbox_cap = 1000;
  std::uint64_t seed = 0;

  void validate() const;
  double max_latency_s() const;
};

/// Network config file, e.g.
/// {"default_link":{"latency_s":0.05,"loss":0},"client_links":{"pn1":{...}},
///  "partitions":[{"t_start_s":..,"t_end_s":..,"nodes":[..]}],
///  "failover":{"broker_priority":["rpi-main","rpi-backup"],"heartbeat_interval_s":1,"miss_threshold":3},
///  "outages":[{"broker":"rpi-main","t_kill_s":10}], "retry_interval_s":1, "max_retries":10}
/// A link may give "latency_s" or "latency_min_s"/"latency_max_s".
MeshConfig parse_mesh_config(const std::string& json_text);
MeshConfig load_mesh_config(const std::filesystem::path& path);

struct Delivery {
  double t_s = 0.0;
  std::string client;
  Message message;
};

enum class TraceEvent { Publish, Drop, Deliver, Retry, Failover };
std::string to_string(TraceEvent e);

struct TraceRecord {
  double t_s = 0.0;
  std::uint64_t msg_id = 0;
  std::string topic;
  std::string from;
  std::string to;
  TraceEvent event = TraceEvent::Publish;
};

/// {"t","msg_id","topic","from","to","event"}
std::string to_json_line(const TraceRecord& r);

struct BrokerTransition {
  double t_s = 0.0;  // reconnection completed
  std::string client;
  std::string from_broker;
  std::string to_broker;
};

/// Snapshot of one broker's bookkeeping.
struct BrokerState {
  std::string id;
  bool alive = true;
  std::map<std::string, std::vector<std::string>> subscriptions;  // client -> patterns
  std::size_t in_flight = 0;
  std::map<std::uint64_t, int> retry_counters;  // msg_id -> retries so far
};

/// What the node pipelines need from a transport. The simulated network is
/// the only implementation here; a real broker client can sit behind it.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void subscribe(const std::string& client, const std::string& pattern) = 0;
  virtual std::uint64_t publish(const std::string& client, const std::string& topic, std::string payload,
                                Qos qos) = 0;
  virtual std::vector<Delivery> advance_to(double t_s) = 0;
  virtual std::optional<double> next_event_time() const = 0;
  virtual double now() const = 0;
};

/// Discrete-event simulation of clients talking to a prioritised set of brokers.
class Network final : public Transport {
 public:
  explicit Network(MeshConfig config);

  /// Registers a client, connected to the first broker in priority order.
  void add_client(const std::string& id);

  void subscribe(const std::string& client, const std::string& pattern) override;
  std::uint64_t publish(const std::string& client, const std::string& topic, std::string payload, Qos qos) override;

  std::vector<Delivery> advance(double dt_s);
  std::vector<Delivery> advance_to(double t_s) override;
  std::optional<double> next_event_time() const override;
  double now() const override { return now_; }

  void kill_broker(const std::string& broker);
  void revive_broker(const std::string& broker);

  std::optional<std::string> connected_broker(const std::string& client) const;
  BrokerState broker_state(const std::string& broker) const;
  const std::vector<TraceRecord>& trace() const { return trace_; }
  const std::vector<BrokerTransition>& transitions() const { return transitions_; }
  const std::vector<std::string>& anomalies() const { return anomalies_; }
  const MeshConfig& config() const { return config_; }

 private:
  enum class PacketKind { Publish, Forward, Ack, Heartbeat, Connect, ConnAck };
  enum class EventKind { Arrive, Retry, HeartbeatTick, ClientCheck, ConnectTimeout, Kill, Revive };

  struct Packet {
    PacketKind kind = PacketKind::Publish;
    std::string from;
    std::string to;
    Message message;
    std::uint64_t entry_id = 0;  // outbound entry acknowledged / carried
    std::uint64_t attempt_tag = 0;
    std::vector<std::string> subscriptions;  // Connect only
  };

  struct Event {
    double t_s = 0.0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::Arrive;
    std::string node;
    std::uint64_t ref = 0;
    Packet packet;
  };
  struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
      return a.t_s != b.t_s ? a.t_s > b.t_s : a.seq > b.seq;
    }
  };

  // At-least-once transfer awaiting acknowledgement. Entries sharing a queue
  // key are sent one at a time in FIFO order.
  struct OutEntry {
    std::uint64_t id = 0;
    std::string sender;
    std::string receiver;  // empty for client entries: always the current broker
    std::string queue_key;
    Message message;
    int retries = 0;
    bool in_flight = false;
    std::uint64_t send_tag = 0;
  };

  enum class ClientMode { Connected, Connecting };
  struct Client {
    std::string id;
    ClientMode mode = ClientMode::Connected;
    std::string broker;
    std::size_t priority_index = 0;
    std::uint64_t connect_attempt = 0;
    std::string previous_broker;
    int misses = 0;
    bool heard_since_check = true;
    std::vector<std::string> patterns;
    std::deque<Message> deferred_at_most_once;  // published while connecting
  };

  struct Broker {
    std::string id;
    bool alive = true;
    std::map<std::string, std::vector<std::string>> subscriptions;
  };

  void schedule(Event e);
  void transmit(Packet packet);
  bool link_up(const std::string& a, const std::string& b) const;
  const LinkModel& link_for(const std::string& client) const;

  void enqueue_out(OutEntry entry);
  void pump_queue(const std::string& queue_key);
  void send_entry(OutEntry& entry);
  void finish_entry(std::uint64_t entry_id, bool delivered, const std::string& why = {});
  std::size_t buffered_count(const std::string& client) const;
  void enforce_outbox_cap(const std::string& client);

  void handle(const Event& e, std::vector<Delivery>& out);
  void on_arrive(const Packet& p, std::vector<Delivery>& out);
  void on_retry(std::uint64_t entry_id, std::uint64_t send_tag);
  void on_heartbeat_tick(const std::string& broker);
  void on_client_check(const std::string& client);
  void on_connect_timeout(const std::string& client, std::uint64_t attempt);
  void start_connect(Client& c);
  void route(Broker& b, const Message& m);
  void record(TraceEvent ev, const Message& m, const std::string& from, const std::string& to);

  MeshConfig config_;
  Rng rng_;
  double now_ = 0.0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_msg_id_ = 1;
  std::uint64_t next_entry_id_ = 1;
  std::priority_queue<Event, std::vector<Event>, EventOrder> events_;
  std::map<std::string, Client> clients_;
  std::map<std::string, Broker> brokers_;
  std::set<std::string> broker_ids_;
  std::map<std::uint64_t, OutEntry> entries_;
  std::map<std::string, std::deque<std::uint64_t>> queues_;
  std::map<std::pair<std::string, std::string>, double> last_arrival_;
  std::vector<TraceRecord> trace_;
  std::vector<BrokerTransition> transitions_;
  std::vector<std::string> anomalies_;
};

}  // namespace elemantra::mesh
