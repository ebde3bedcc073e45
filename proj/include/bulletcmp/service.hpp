#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "bulletcmp/bundle.hpp"

namespace bulletcmp {

struct HttpResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

/// Read-only view of one bundle, answering the /api routes and static files.
/// Immutable after construction, so concurrent calls to get() are safe.
class BundleService {
public:
    explicit BundleService(Bundle bundle, std::string static_dir = {});

    /// `path` is the decoded request path without the query string.
    HttpResponse get(const std::string& path) const;

    const Bundle& bundle() const { return bundle_; }

private:
    HttpResponse pair(const std::string& b1, const std::string& b2) const;
    HttpResponse land(const std::string& bullet, const std::string& land) const;
    HttpResponse static_file(const std::string& path) const;

    Bundle bundle_;
    std::string static_dir_;
    std::string manifest_body_, scores_body_, analysis_body_;
};

HttpResponse json_error(int status, const std::string& message);

struct ServeOptions {
    std::string bind = "127.0.0.1";
    int port = 8080;
};

/// Applies BULLETCMP_BIND / BULLETCMP_PORT from `getenv` over the given options.
ServeOptions apply_env(ServeOptions opts, const std::function<const char*(const char*)>& getenv);

/// HTTP front end over a BundleService.
class ServiceHost {
public:
    explicit ServiceHost(const BundleService& service);
    ~ServiceHost();
    ServiceHost(const ServiceHost&) = delete;
    ServiceHost& operator=(const ServiceHost&) = delete;

    /// Binds; port 0 picks a free port. Returns the bound port. Throws if the
    /// address is unavailable.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void serve();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace bulletcmp
