#include "arwlab/arw.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>

#include "arwlab/error.hpp"
#include "arwlab/rng.hpp"

namespace arwlab {

namespace {

enum class State : std::uint8_t { active, sleeping, exited };
enum class EventKind : std::uint8_t { jump, sleep };

struct Event {
    double time;
    std::uint64_t seq;
    std::uint32_t particle;
    std::uint32_t generation;
    EventKind kind;

    // Min-heap on (time, seq).
    bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
};

struct Particle {
    VertexId at;
    State state;
    std::uint32_t jump_gen = 0;
    std::uint32_t sleep_gen = 0;
    std::uint32_t slot = 0; // index inside occupants[at]
};

class Engine {
public:
    Engine(const Network& net, const Kernel& kernel, const ArwConfig& cfg)
        : net_(net), kernel_(kernel), cfg_(cfg), finite_sleep_(std::isfinite(cfg.sleep_rate)),
          occupants_(net.size()) {}

    ArwRunResult run();

private:
    void place(std::uint32_t p, VertexId v) {
        auto& occ = occupants_[v];
        particles_[p].at = v;
        particles_[p].slot = static_cast<std::uint32_t>(occ.size());
        occ.push_back(p);
    }

    void lift(std::uint32_t p) {
        auto& occ = occupants_[particles_[p].at];
        const std::uint32_t slot = particles_[p].slot;
        occ[slot] = occ.back();
        particles_[occ[slot]].slot = slot;
        occ.pop_back();
    }

    void schedule_jump(std::uint32_t p) {
        auto& q = particles_[p];
        ++q.jump_gen;
        queue_.push({now_ + streams_[p].exponential(1.0), seq_++, p, q.jump_gen, EventKind::jump});
    }

    void schedule_sleep(std::uint32_t p) {
        auto& q = particles_[p];
        ++q.sleep_gen;
        queue_.push({now_ + streams_[p].exponential(cfg_.sleep_rate), seq_++, p, q.sleep_gen, EventKind::sleep});
    }

    void cancel_sleep(std::uint32_t p) { ++particles_[p].sleep_gen; }

    void fall_asleep(std::uint32_t p) {
        auto& q = particles_[p];
        q.state = State::sleeping;
        ++q.jump_gen;
        ++q.sleep_gen;
        --active_;
    }

    void wake(std::uint32_t p) {
        particles_[p].state = State::active;
        ++active_;
        schedule_jump(p);
    }

    void handle_jump(std::uint32_t p);

    const Network& net_;
    const Kernel& kernel_;
    const ArwConfig& cfg_;
    bool finite_sleep_;

    std::vector<Particle> particles_;
    std::vector<rng::Stream> streams_;
    std::vector<std::vector<std::uint32_t>> occupants_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
    std::uint64_t seq_ = 0;
    std::uint64_t active_ = 0;
    double now_ = 0.0;
    ArwRunResult res_;
};

void Engine::handle_jump(std::uint32_t p) {
    const VertexId from = particles_[p].at;
    const VertexId to = kernel_.sample(from, streams_[p].uniform());
    const bool absorbed = cfg_.boundary == Boundary::absorbing && !net_.interior(to);
    res_.traces[from].push_back({to, now_, p, absorbed});
    ++res_.hops;
    res_.visited[to] = 1;

    lift(p);
    if (occupants_[from].size() == 1) {
        const std::uint32_t left = occupants_[from].front();
        if (particles_[left].state == State::active) {
            if (finite_sleep_) schedule_sleep(left);
            else fall_asleep(left);
        }
    }

    if (absorbed) {
        particles_[p].at = to;
        particles_[p].state = State::exited;
        ++particles_[p].jump_gen;
        ++particles_[p].sleep_gen;
        --active_;
        ++res_.exited;
        return;
    }

    place(p, to);
    ++res_.visits[to];
    auto& here = occupants_[to];
    if (here.size() == 1) {
        if (finite_sleep_) {
            schedule_jump(p);
            schedule_sleep(p);
        } else {
            fall_asleep(p);
        }
        return;
    }
    for (std::uint32_t q : here) {
        if (q == p) continue;
        cancel_sleep(q);
        if (particles_[q].state == State::sleeping) wake(q);
    }
    cancel_sleep(p);
    schedule_jump(p);
}

ArwRunResult Engine::run() {
    const auto& init = cfg_.initial;
    if (init.size() != net_.size()) throw Error(ErrorKind::invalid_parameter, "occupation size differs from network");
    if (kernel_.size() != net_.size()) throw Error(ErrorKind::invalid_parameter, "kernel size differs from network");
    if (!(cfg_.sleep_rate > 0.0)) throw Error(ErrorKind::invalid_parameter, "sleep rate must be positive or infinite");

    const std::size_t n = net_.size();
    res_.visits.assign(n, 0);
    res_.traces.assign(n, {});
    res_.visited.assign(n, 0);
    res_.origin = net_.origin();
    res_.sleep_rate = cfg_.sleep_rate;
    res_.nearest_neighbor = kernel_.nearest_neighbor();

    for (VertexId v = 0; v < n; ++v) {
        for (std::uint32_t k = 0; k < init[v]; ++k) {
            const auto id = static_cast<std::uint32_t>(particles_.size());
            particles_.push_back({v, State::active});
            streams_.emplace_back(cfg_.seed, rng::Tag::arw, std::initializer_list<std::uint64_t>{id});
            place(id, v);
            res_.particle_start.push_back(v);
        }
    }
    for (VertexId v = 0; v < n; ++v) {
        const auto& here = occupants_[v];
        if (here.empty()) continue;
        res_.visited[v] = 1;
        if (here.size() == 1 && !finite_sleep_) {
            particles_[here.front()].state = State::sleeping;
            continue;
        }
        ++res_.visits[v];
        for (std::uint32_t p : here) {
            ++active_;
            schedule_jump(p);
            if (here.size() == 1) schedule_sleep(p);
        }
    }

    const auto& stop = cfg_.stop;
    res_.reason = StopReason::stabilized;
    while (active_ > 0) {
        if (res_.events >= stop.max_events) {
            res_.reason = StopReason::event_cap;
            break;
        }
        const Event ev = queue_.top();
        queue_.pop();
        auto& q = particles_[ev.particle];
        if (q.state != State::active) continue;
        if (ev.kind == EventKind::jump && ev.generation != q.jump_gen) continue;
        if (ev.kind == EventKind::sleep && ev.generation != q.sleep_gen) continue;
        if (ev.time > stop.max_time) {
            res_.reason = StopReason::time_cap;
            now_ = stop.max_time;
            break;
        }
        now_ = ev.time;
        ++res_.events;
        if (ev.kind == EventKind::sleep) {
            // Sleep clocks are cancelled whenever a vertex becomes shared.
            if (occupants_[q.at].size() == 1) fall_asleep(ev.particle);
        } else {
            handle_jump(ev.particle);
        }
    }
    res_.time = now_;
    res_.stabilized = active_ == 0;
    res_.inconclusive = !res_.stabilized && stop.until_stable;

    res_.final_active.assign(n, 0);
    res_.final_sleeping.assign(n, 0);
    res_.particle_end.resize(particles_.size());
    res_.particle_exited.resize(particles_.size());
    for (std::size_t i = 0; i < particles_.size(); ++i) {
        const auto& q = particles_[i];
        res_.particle_end[i] = q.at;
        res_.particle_exited[i] = q.state == State::exited;
        if (q.state == State::active) ++res_.final_active[q.at];
        else if (q.state == State::sleeping) ++res_.final_sleeping[q.at];
    }

    std::vector<VertexId> comp;
    if (res_.visited[res_.origin]) {
        std::vector<char> seen(n, 0);
        std::deque<VertexId> bfs{res_.origin};
        seen[res_.origin] = 1;
        while (!bfs.empty()) {
            const VertexId x = bfs.front();
            bfs.pop_front();
            comp.push_back(x);
            for (const auto& nb : net_.neighbors(x)) {
                if (res_.visited[nb.to] && !seen[nb.to]) {
                    seen[nb.to] = 1;
                    bfs.push_back(nb.to);
                }
            }
        }
    }
    res_.origin_component = VertexSet(std::move(comp), VertexSet::Tag::component);
    return std::move(res_);
}

} // namespace

ArwRunResult simulate(const Network& net, const Kernel& kernel, const ArwConfig& cfg) {
    return Engine(net, kernel, cfg).run();
}

bool visits(const ArwRunResult& result, VertexId x, std::uint64_t r) {
    if (x >= result.visits.size()) throw Error(ErrorKind::unknown_vertex, "vertex " + std::to_string(x));
    return result.visits[x] >= r;
}

const VertexSet& component_of_origin(const ArwRunResult& result) { return result.origin_component; }

std::vector<std::vector<VertexId>> hop_trace(const ArwRunResult& result) {
    std::vector<std::vector<VertexId>> out(result.traces.size());
    for (std::size_t x = 0; x < result.traces.size(); ++x)
        for (const auto& h : result.traces[x]) out[x].push_back(h.to);
    return out;
}

std::vector<std::uint32_t> replay_counts(const Occupation& initial, const ArwRunResult& result) {
    struct Move {
        double time;
        VertexId from;
        VertexId to;
        bool absorbed;
    };
    std::vector<Move> moves;
    for (VertexId x = 0; x < result.traces.size(); ++x)
        for (const auto& h : result.traces[x]) moves.push_back({h.time, x, h.to, h.absorbed});
    std::sort(moves.begin(), moves.end(), [](const Move& a, const Move& b) { return a.time < b.time; });
    std::vector<std::uint32_t> counts(initial.counts().begin(), initial.counts().end());
    for (const auto& m : moves) {
        if (counts[m.from] == 0) throw Error(ErrorKind::precondition, "trace moves a particle from an empty vertex");
        --counts[m.from];
        if (!m.absorbed) ++counts[m.to];
    }
    return counts;
}

bool origin_component_closed(const ArwRunResult& result) {
    const auto& comp = result.origin_component;
    for (std::size_t i = 0; i < result.particle_end.size(); ++i) {
        if (result.particle_exited[i]) continue;
        if (comp.contains(result.particle_end[i]) && !comp.contains(result.particle_start[i])) return false;
    }
    return true;
}

} // namespace arwlab
