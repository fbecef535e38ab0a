#include "dolce/observer.hpp"

#include "dolce/errors.hpp"

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <map>
#include <thread>

namespace dolce::observer {

namespace {

class ReplayObserver final : public Observer {
public:
    explicit ReplayObserver(const std::string& path) {
        for (const auto& j : io::read_jsonl(path)) {
            io::OutputRow row = io::output_from_json(j);
            responses_[{row.problem_id, row.start, row.c}] = row.output;
        }
    }

    std::optional<std::string> ask(const std::string& problem_id, long long start, long long c,
                                   const std::string&) override {
        auto it = responses_.find({problem_id, start, c});
        if (it == responses_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::map<std::tuple<std::string, long long, long long>, std::string> responses_;
};

class HttpObserver final : public Observer {
public:
    explicit HttpObserver(const config::ObserverConfig& cfg) : cfg_(cfg) {
        if (!cfg.auth_env.empty()) {
            const char* token = std::getenv(cfg.auth_env.c_str());
            if (token) token_ = token;
        }
        // split url into host part and path
        std::string url = cfg.url;
        auto scheme_end = url.find("://");
        std::size_t path_start =
            url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
        if (path_start == std::string::npos) {
            host_ = url;
            path_ = "/";
        } else {
            host_ = url.substr(0, path_start);
            path_ = url.substr(path_start);
        }
    }

    std::optional<std::string> ask(const std::string&, long long, long long,
                                   const std::string& prompt) override {
        nlohmann::json body{{"prompt", prompt}};
        httplib::Headers headers;
        if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
        for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            httplib::Client client(host_);
            client.set_connection_timeout(cfg_.timeout_ms / 1000, (cfg_.timeout_ms % 1000) * 1000);
            client.set_read_timeout(cfg_.timeout_ms / 1000, (cfg_.timeout_ms % 1000) * 1000);
            auto res = client.Post(path_, headers, body.dump(), "application/json");
            if (res && res->status == 200) {
                try {
                    auto j = nlohmann::json::parse(res->body);
                    if (j.contains("text")) return j.at("text").get<std::string>();
                } catch (const nlohmann::json::exception&) {
                    // malformed body: fall through to retry
                }
            }
        }
        return std::nullopt;
    }

private:
    config::ObserverConfig cfg_;
    std::string token_, host_, path_;
};

}  // namespace

std::unique_ptr<Observer> make_replay_observer(const std::string& path) {
    return std::make_unique<ReplayObserver>(path);
}

std::unique_ptr<Observer> make_http_observer(const config::ObserverConfig& cfg) {
    return std::make_unique<HttpObserver>(cfg);
}

std::unique_ptr<Observer> make_observer(const config::ObserverConfig& cfg) {
    switch (cfg.kind) {
        case config::ObserverConfig::Kind::Replay: return make_replay_observer(cfg.path);
        case config::ObserverConfig::Kind::Http: return make_http_observer(cfg);
        case config::ObserverConfig::Kind::None: break;
    }
    throw ConfigError("no observer configured");
}

ObserveResult observe_all(const corpus::UnitizedContext& ctx, const corpus::SpanPlan& plan,
                          const std::string& instruction, const std::string& question,
                          corpus::IdkStyle idk, Observer& obs, int max_in_flight,
                          long long failure_budget) {
    const std::size_t n = plan.spans.size();
    std::vector<std::optional<std::string>> responses(n);
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            const corpus::Span& span = plan.spans[i];
            const std::string prompt = corpus::render_prompt(instruction, ctx, span, question, idk);
            responses[i] = obs.ask(plan.problem_id, span.start, span.len, prompt);
        }
    };

    const int threads = std::max(1, std::min<int>(max_in_flight, static_cast<int>(n)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    ObserveResult result;
    for (std::size_t i = 0; i < n; ++i) {
        if (responses[i]) {
            result.outputs.push_back(
                {plan.problem_id, plan.spans[i].start, plan.spans[i].len, *responses[i]});
        } else {
            ++result.failures;
        }
    }
    if (failure_budget >= 0 && result.failures > failure_budget)
        throw ObserverError("observer failure budget exceeded for problem " + plan.problem_id +
                            " (" + std::to_string(result.failures) + " failures)");
    return result;
}

}  // namespace dolce::observer
