#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "causeway/app.hpp"

namespace httplib {
class Server;
}

namespace causeway {

/// On-disk analysis state:
///
///     <dir>/.lock              pid of the owning process
///     <dir>/graphs/000001.dag  append-only graph history (version = file number)
///     <dir>/data.csv           active dataset, never modified once present
///     <dir>/reports/<id>.json  cached report documents
class Workspace {
public:
    /// Creates the directory if needed, seeds graph/data from the given files
    /// when absent, and takes the lock. Throws WorkspaceLocked when another
    /// live process holds it, Io on filesystem failures.
    Workspace(std::filesystem::path dir, const std::optional<std::string>& graph_file,
              const std::optional<std::string>& data_file, AnalysisConfig config = {});
    ~Workspace();
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;

    const std::filesystem::path& dir() const noexcept { return dir_; }
    const AnalysisConfig& config() const noexcept { return config_; }

    std::uint64_t version() const;
    /// Throws InvalidArgument for versions never created.
    std::shared_ptr<const CausalDag> graph(std::optional<std::uint64_t> version = std::nullopt) const;
    /// Throws InvalidArgument when no dataset is loaded.
    std::shared_ptr<const DataTable> data() const;
    bool has_data() const;

    /// Appends a new version and returns its number. Throws SchemaMismatch if
    /// the variables no longer match the dataset.
    std::uint64_t commit(const CausalDag& g);

    void store_report(const Json& doc);
    std::optional<std::string> load_report(const std::string& id) const;

private:
    std::filesystem::path dir_;
    AnalysisConfig config_;
    mutable std::shared_mutex mutex_;
    std::vector<std::shared_ptr<const CausalDag>> history_;
    std::shared_ptr<const DataTable> data_;
    mutable std::mutex report_mutex_;
    std::map<std::string, std::string> reports_;
    bool locked_ = false;
};

/// Installs the /api/v1 routes on `server`.
void mount_api(httplib::Server& server, Workspace& workspace);

/// Runs the API on a background thread; used by `serve` and by tests.
class ServiceHandle {
public:
    ServiceHandle(Workspace& workspace, const std::string& host, int port);
    ~ServiceHandle();
    ServiceHandle(const ServiceHandle&) = delete;
    ServiceHandle& operator=(const ServiceHandle&) = delete;

    int port() const noexcept { return port_; }
    void stop();

private:
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

struct ServeOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path workspace;
    std::optional<std::string> graph;
    std::optional<std::string> data;
    AnalysisConfig config;
};

/// Blocks until SIGINT/SIGTERM, then shuts down and releases the lock.
/// Throws PortInUse or WorkspaceLocked.
void serve(const ServeOptions& options, std::ostream& log);

}  // namespace causeway
