#include "causeway/service.hpp"

#include <csignal>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <sys/socket.h>
#include <unistd.h>

#include <httplib.h>

#include "causeway/dagfile.hpp"

namespace causeway {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& p, const std::string& text) {
    auto tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
        out << text;
        if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    }
    fs::rename(tmp, p);
}

std::string version_name(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06llu.dag", static_cast<unsigned long long>(v));
    return buf;
}

bool process_alive(long pid) { return pid > 0 && ::kill(static_cast<pid_t>(pid), 0) == 0; }

void acquire_lock(const fs::path& lock) {
    for (int attempt = 0; attempt < 2; ++attempt) {
        int fd = ::open(lock.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd >= 0) {
            const auto pid = std::to_string(::getpid()) + "\n";
            [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
            ::close(fd);
            return;
        }
        long owner = 0;
        std::ifstream in(lock);
        in >> owner;
        if (process_alive(owner)) {
            throw Error(ErrorCode::WorkspaceLocked,
                        "workspace " + lock.parent_path().string() + " is locked by process " + std::to_string(owner));
        }
        std::error_code ec;
        fs::remove(lock, ec);  // stale
    }
    throw Error(ErrorCode::WorkspaceLocked, "cannot acquire " + lock.string());
}

bool same_schema(const CausalDag& g, const Schema& s) {
    if (g.size() != s.size()) return false;
    for (const auto& v : g.variables()) {
        auto i = s.find(v.name());
        if (!i || !(s.variable(*i) == v)) return false;
    }
    return true;
}

}  // namespace

Workspace::Workspace(fs::path dir, const std::optional<std::string>& graph_file,
                     const std::optional<std::string>& data_file, AnalysisConfig config)
    : dir_(std::move(dir)), config_(config) {
    std::error_code ec;
    fs::create_directories(dir_ / "graphs", ec);
    fs::create_directories(dir_ / "reports", ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create workspace " + dir_.string() + ": " + ec.message());
    acquire_lock(dir_ / ".lock");
    locked_ = true;
    try {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir_ / "graphs")) {
            if (entry.path().extension() == ".dag") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (std::size_t i = 0; i < files.size(); ++i) {
            if (files[i].filename() != version_name(i + 1)) {
                throw Error(ErrorCode::Io, "graph history has a gap at " + files[i].string());
            }
            history_.push_back(std::make_shared<const CausalDag>(parse_dag_text(read_file(files[i]))));
        }
        if (history_.empty()) {
            if (!graph_file) throw Error(ErrorCode::InvalidArgument, "empty workspace needs an initial graph");
            auto g = load_dag(*graph_file);
            write_file_atomic(dir_ / "graphs" / version_name(1), serialize_dag(g));
            history_.push_back(std::make_shared<const CausalDag>(std::move(g)));
        }
        const auto data_path = dir_ / "data.csv";
        if (!fs::exists(data_path) && data_file) fs::copy_file(*data_file, data_path);
        if (fs::exists(data_path)) {
            Schema schema(history_.front()->variables());
            data_ = std::make_shared<const DataTable>(load_table_file(data_path.string(), schema).table);
        }
        for (const auto& entry : fs::directory_iterator(dir_ / "reports")) {
            if (entry.path().extension() == ".json") {
                reports_[entry.path().stem().string()] = read_file(entry.path());
            }
        }
    } catch (...) {
        fs::remove(dir_ / ".lock", ec);
        throw;
    }
}

Workspace::~Workspace() {
    if (locked_) {
        std::error_code ec;
        fs::remove(dir_ / ".lock", ec);
    }
}

std::uint64_t Workspace::version() const {
    std::shared_lock lock(mutex_);
    return history_.size();
}

std::shared_ptr<const CausalDag> Workspace::graph(std::optional<std::uint64_t> version) const {
    std::shared_lock lock(mutex_);
    const auto v = version.value_or(history_.size());
    if (v == 0 || v > history_.size()) {
        throw Error(ErrorCode::InvalidArgument, "graph version " + std::to_string(v) + " does not exist");
    }
    return history_[v - 1];
}

std::shared_ptr<const DataTable> Workspace::data() const {
    std::shared_lock lock(mutex_);
    if (!data_) throw Error(ErrorCode::InvalidArgument, "workspace has no dataset");
    return data_;
}

bool Workspace::has_data() const {
    std::shared_lock lock(mutex_);
    return static_cast<bool>(data_);
}

std::uint64_t Workspace::commit(const CausalDag& g) {
    std::unique_lock lock(mutex_);
    if (data_ && !same_schema(g, data_->schema())) {
        throw Error(ErrorCode::SchemaMismatch, "graph variables do not match the workspace dataset");
    }
    const auto v = history_.size() + 1;
    write_file_atomic(dir_ / "graphs" / version_name(v), serialize_dag(g));
    history_.push_back(std::make_shared<const CausalDag>(g));
    return v;
}

void Workspace::store_report(const Json& doc) {
    const auto id = doc.at("report_id").get<std::string>();
    const auto text = dump_document(doc);
    std::lock_guard lock(report_mutex_);
    if (reports_.count(id)) return;
    write_file_atomic(dir_ / "reports" / (id + ".json"), text);
    reports_[id] = text;
}

std::optional<std::string> Workspace::load_report(const std::string& id) const {
    std::lock_guard lock(report_mutex_);
    auto it = reports_.find(id);
    if (it == reports_.end()) return std::nullopt;
    return it->second;
}

namespace {

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::CycleDetected:
        case ErrorCode::DuplicateEdge:
        case ErrorCode::SelfLoop:
        case ErrorCode::SchemaMismatch:
        case ErrorCode::WorkspaceLocked:
            return 409;
        case ErrorCode::InvalidAdjustment:
        case ErrorCode::PerfectSeparation:
        case ErrorCode::DegenerateOutcome:
        case ErrorCode::DegenerateTable:
        case ErrorCode::TooManyFailures:
        case ErrorCode::ZeroDenominator:
        case ErrorCode::NonFinite:
            return 422;
        case ErrorCode::Io:
            return 500;
        default:
            return 400;
    }
}

void send(httplib::Response& res, int status, const std::string& body) {
    res.status = status;
    res.set_content(body, "application/json");
}

void send_error(httplib::Response& res, const Error& e) { send(res, http_status(e.code()), dump_document(error_document(e))); }

Json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    try {
        auto j = Json::parse(req.body);
        if (!j.is_object()) throw Error(ErrorCode::ParseError, "request body must be a JSON object");
        return j;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("request body: ") + e.what());
    }
}

std::optional<std::uint64_t> version_param(const httplib::Request& req, const Json* body = nullptr) {
    if (req.has_param("version")) {
        try {
            return std::stoull(req.get_param_value("version"));
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, "version must be a positive integer");
        }
    }
    if (body && body->contains("version")) return body->at("version").get<std::uint64_t>();
    return std::nullopt;
}

AnalysisConfig apply_overrides(AnalysisConfig cfg, const Json& j) {
    try {
        if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("replicates")) cfg.replicates = j["replicates"].get<std::size_t>();
        if (j.contains("measure")) {
            const auto m = j["measure"].get<std::string>();
            if (m != "rr" && m != "or") throw Error(ErrorCode::InvalidArgument, "measure must be rr or or");
            cfg.measure = m == "rr" ? Measure::RiskRatio : Measure::OddsRatio;
        }
        if (j.contains("statistic")) {
            const auto s = j["statistic"].get<std::string>();
            if (s != "g2" && s != "pearson") throw Error(ErrorCode::InvalidArgument, "statistic must be g2 or pearson");
            cfg.statistic = s == "g2" ? CiStatistic::GSquared : CiStatistic::PearsonChiSquared;
        }
        if (j.contains("basis")) {
            const auto b = j["basis"].get<std::string>();
            if (b != "local-markov" && b != "missing-edge") {
                throw Error(ErrorCode::InvalidArgument, "basis must be local-markov or missing-edge");
            }
            cfg.basis = b == "local-markov" ? ClaimBasis::LocalMarkov : ClaimBasis::MissingEdge;
        }
        if (j.contains("truncate")) cfg.truncate = j["truncate"].get<bool>();
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("bad parameter: ") + e.what());
    }
    return cfg;
}

Json query_as_json(const httplib::Request& req) {
    Json j = Json::object();
    for (const auto& [k, v] : req.params) {
        if (k == "alpha") {
            try {
                j[k] = std::stod(v);
            } catch (const std::exception&) {
                throw Error(ErrorCode::InvalidArgument, "alpha must be a number");
            }
        } else if (k == "statistic" || k == "basis") {
            j[k] = v;
        }
    }
    return j;
}

template <typename Fn>
auto guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const Error& e) {
            send_error(res, e);
        } catch (const std::exception& e) {
            send_error(res, Error(ErrorCode::InvalidArgument, e.what()));
        }
    };
}

void reply_report(Workspace& ws, httplib::Response& res, const Json& doc) {
    ws.store_report(doc);
    send(res, 200, dump_document(doc));
}

// Serializes graph mutations so each edit sees the latest version.
std::mutex& edit_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

void mount_api(httplib::Server& server, Workspace& ws) {
    server.Get("/api/v1/graph", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
        auto v = version_param(req).value_or(ws.version());
        send(res, 200, dump_document(graph_document(*ws.graph(v), v)));
    }));

    server.Post("/api/v1/graph", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req);
        if (!body.contains("dagfile") || !body["dagfile"].is_string()) {
            throw Error(ErrorCode::InvalidArgument, "body needs a \"dagfile\" string");
        }
        const auto g = parse_dag_text(body["dagfile"].get<std::string>());
        std::lock_guard lock(edit_mutex());
        const auto v = ws.commit(g);
        send(res, 201, dump_document(graph_document(*ws.graph(v), v)));
    }));

    server.Post("/api/v1/graph/edits", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req);
        Json edits = body.contains("edits") ? body["edits"] : Json::array({body});
        if (!edits.is_array() || edits.empty()) throw Error(ErrorCode::InvalidArgument, "no edits given");
        std::lock_guard lock(edit_mutex());
        auto g = *ws.graph();
        for (const auto& e : edits) {
            std::string op, source, target;
            try {
                op = e.at("op").get<std::string>();
                source = e.at("source").get<std::string>();
                target = e.at("target").get<std::string>();
            } catch (const Json::exception&) {
                throw Error(ErrorCode::InvalidArgument, "each edit needs op, source and target");
            }
            if (op == "add") {
                g = g.with_edge(source, target);
            } else if (op == "remove") {
                g = g.without_edge(source, target);
            } else {
                throw Error(ErrorCode::InvalidArgument, "edit op must be add or remove");
            }
        }
        const auto v = ws.commit(g);
        send(res, 201, dump_document(graph_document(*ws.graph(v), v)));
    }));

    server.Get("/api/v1/implications", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
        const auto v = version_param(req).value_or(ws.version());
        const auto cfg = apply_overrides(ws.config(), query_as_json(req));
        reply_report(ws, res, implications_document(*ws.graph(v), v, *ws.data(), cfg));
    }));

    server.Get("/api/v1/adjustment-sets", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
        if (!req.has_param("treatment") || !req.has_param("outcome")) {
            throw Error(ErrorCode::InvalidArgument, "treatment and outcome query parameters are required");
        }
        const auto v = version_param(req).value_or(ws.version());
        std::vector<std::string> treatments;
        for (std::size_t i = 0; i < req.get_param_value_count("treatment"); ++i) {
            treatments.push_back(req.get_param_value("treatment", i));
        }
        const auto g = ws.graph(v);
        for (const auto& t : treatments) g->index_of(t);
        g->index_of(req.get_param_value("outcome"));
        reply_report(ws, res, adjustment_document(*g, v, treatments, req.get_param_value("outcome"), ws.config()));
    }));

    server.Post("/api/v1/estimate", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req);
        const auto v = version_param(req, &body).value_or(ws.version());
        const auto cfg = apply_overrides(ws.config(), body);
        EstimateRequest er;
        try {
            er.treatment = body.at("treatment").get<std::string>();
            er.outcome = body.at("outcome").get<std::string>();
            if (body.contains("adjustment") && !body["adjustment"].is_null()) {
                er.adjustment = body["adjustment"].get<std::vector<std::string>>();
            }
            if (body.contains("outcome_levels")) {
                er.outcome_levels = body["outcome_levels"].get<std::vector<std::string>>();
            }
            er.compare_unadjusted = body.value("compare_unadjusted", false);
            er.override_adjustment = body.value("override", false);
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::InvalidArgument, std::string("estimate request: ") + e.what());
        }
        reply_report(ws, res, estimate_document(*ws.graph(v), v, *ws.data(), er, cfg));
    }));

    server.Post("/api/v1/simulate", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req);
        std::size_t n = 0;
        std::uint64_t seed = ws.config().seed;
        std::string scm_text;
        try {
            scm_text = body.at("scm").get<std::string>();
            n = body.at("n").get<std::size_t>();
            if (body.contains("seed")) seed = body["seed"].get<std::uint64_t>();
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::InvalidArgument, std::string("simulate request needs scm and n: ") + e.what());
        }
        const auto m = parse_scm_text(scm_text);
        const auto table = sample(m, n, seed, ws.config().threads);
        auto doc = simulate_document(m, n, seed, table);
        ws.store_report(doc);
        doc["csv"] = table_to_csv(table);
        send(res, 200, dump_document(doc));
    }));

    server.Get(R"(/api/v1/reports/([0-9a-f]+))", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
        const auto id = req.matches[1].str();
        auto doc = ws.load_report(id);
        if (!doc) {
            send(res, 404, dump_document(error_document(Error(ErrorCode::InvalidArgument, "no report " + id))));
            return;
        }
        send(res, 200, *doc);
    }));
}

namespace {

void exclusive_bind_options(socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
}

}  // namespace

ServiceHandle::ServiceHandle(Workspace& workspace, const std::string& host, int port)
    : server_(std::make_unique<httplib::Server>()) {
    server_->set_socket_options(exclusive_bind_options);
    mount_api(*server_, workspace);
    if (port == 0) {
        port_ = server_->bind_to_any_port(host);
        if (port_ < 0) throw Error(ErrorCode::PortInUse, "cannot bind " + host);
    } else {
        if (!server_->bind_to_port(host, port)) {
            throw Error(ErrorCode::PortInUse, "port " + std::to_string(port) + " on " + host + " is in use");
        }
        port_ = port;
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

ServiceHandle::~ServiceHandle() { stop(); }

void ServiceHandle::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

void serve(const ServeOptions& options, std::ostream& log) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    Workspace ws(options.workspace, options.graph, options.data, options.config);
    ServiceHandle handle(ws, options.host, options.port);
    log << "causeway serving " << ws.dir().string() << " on http://" << options.host << ":" << handle.port()
        << " (graph v" << ws.version() << ")" << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    log << "shutting down (signal " << sig << ")" << std::endl;
    handle.stop();
}

}  // namespace causeway
