#pragma once

#include "dolce/config.hpp"
#include "dolce/corpus.hpp"
#include "dolce/jsonl.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dolce::observer {

// A probing backend: prompt in, raw model text out. Absent responses turn
// into IDK records downstream (degraded-data policy).
class Observer {
public:
    virtual ~Observer() = default;
    virtual std::optional<std::string> ask(const std::string& problem_id, long long start,
                                           long long c, const std::string& prompt) = 0;
};

/// Responses preloaded from a JSONL file, keyed by (problem_id, start, c).
std::unique_ptr<Observer> make_replay_observer(const std::string& path);

/// Generic JSON POST: {"prompt": ...} -> {"text": ...}, with retries and a
/// bearer token taken from the configured environment variable.
std::unique_ptr<Observer> make_http_observer(const config::ObserverConfig& cfg);

std::unique_ptr<Observer> make_observer(const config::ObserverConfig& cfg);

struct ObserveResult {
    std::vector<io::OutputRow> outputs;  // responses only; missing spans are absent
    long long failures = 0;
};

/// Renders prompts for every planned span and queries the observer with at
/// most `max_in_flight` concurrent calls. Output order matches span order.
/// Throws ObserverError when the failure budget is exceeded.
ObserveResult observe_all(const corpus::UnitizedContext& ctx, const corpus::SpanPlan& plan,
                          const std::string& instruction, const std::string& question,
                          corpus::IdkStyle idk, Observer& obs, int max_in_flight,
                          long long failure_budget);

}  // namespace dolce::observer
