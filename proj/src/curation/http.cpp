#include "derivmine/curation/http.hpp"

#include <httplib.h>

#include "derivmine/core/error.hpp"

namespace derivmine::curation {

int http_status(Errc code) noexcept {
  switch (code) {
    case Errc::UnknownSample:
    case Errc::UnknownExport: return 404;
    case Errc::QueueEmpty: return 404;
    case Errc::VersionConflict:
    case Errc::NotReviewable:
    case Errc::DuplicateId:
    case Errc::NothingAccepted: return 409;
    case Errc::RubricViolation: return 422;
    case Errc::InvalidDecision:
    case Errc::ConfigError:
    case Errc::UsageError: return 400;
    default: return 500;
  }
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, Errc code, const std::string& message) {
  send_json(res, http_status(code), json{{"code", errc_name(code)}, {"message", message}});
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidDecision, std::string("request body is not JSON: ") + e.what());
  }
}

template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const json::exception& e) {
      send_error(res, Errc::InvalidDecision, e.what());
    } catch (const std::exception& e) {
      send_json(res, 500, json{{"code", "InternalError"}, {"message", e.what()}});
    }
  };
}

json events_json(const std::vector<store::StoreEvent>& events) {
  json out = json::array();
  for (const auto& e : events) out.push_back(store::to_json(e));
  return out;
}

}  // namespace

struct CurationServer::Impl {
  CurationService& service;
  httplib::Server server;
  int port = -1;

  explicit Impl(CurationService& s) : service(s) {}
};

CurationServer::CurationServer(CurationService& service, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(service)) {
  auto& svc = impl_->service;
  auto& srv = impl_->server;
  // No SO_REUSEPORT: a second server on the same port must fail to bind.
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });

  srv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, json{{"ok", true}}); });

  srv.Get("/queue/next", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            std::string reviewer = req.get_param_value("reviewer");
            if (reviewer.empty()) reviewer = req.get_header_value("X-Reviewer-Id");
            if (reviewer.empty()) throw Error(Errc::InvalidDecision, "reviewer is required");
            std::optional<std::string> paper;
            if (req.has_param("paper")) paper = req.get_param_value("paper");
            send_json(res, 200, svc.next_for_review(reviewer, paper).to_json());
          }));

  srv.Post("/queue/enqueue", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const auto body = parse_body(req);
             const auto ids = body.at("sample_ids").get<std::vector<std::string>>();
             send_json(res, 200, json{{"enqueued", svc.enqueue_samples(ids)}});
           }));

  srv.Get(R"(/samples/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, svc.get(req.matches[1]).to_json());
          }));

  srv.Get(R"(/samples/([^/]+)/audit)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, json{{"sample_id", req.matches[1]}, {"events", events_json(svc.audit_trail(req.matches[1]))}});
          }));

  srv.Post(R"(/samples/([^/]+)/decision)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             auto body = parse_body(req);
             const std::string id = req.matches[1];
             if (body.is_object()) {
               if (body.contains("sample_id") && body.at("sample_id") != id)
                 throw Error(Errc::InvalidDecision, "sample_id in the body does not match the path");
               body["sample_id"] = id;
               if (!body.contains("reviewer_id") && req.has_header("X-Reviewer-Id"))
                 body["reviewer_id"] = req.get_header_value("X-Reviewer-Id");
             }
             auto decision = decision_from_json(body);
             const auto s = svc.submit_decision(std::move(decision));
             send_json(res, 200,
                       json{{"sample_id", s.sample_id},
                            {"version", s.version},
                            {"stage", store::to_string(s.stage)},
                            {"decision_id", id + "@v" + std::to_string(s.version - 1)}});
           }));

  srv.Post("/exports", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const auto body = parse_body(req);
             const auto name = body.at("name").get<std::string>();
             const auto policy_name = body.value("policy", std::string("all_accepted"));
             const auto policy = parse_selection_policy(policy_name);
             if (!policy) throw Error(Errc::ConfigError, "unknown selection policy " + policy_name);
             std::optional<std::size_t> k;
             if (body.contains("k") && !body.at("k").is_null()) k = body.at("k").get<std::size_t>();
             send_json(res, 201, svc.export_dataset(name, *policy, k).meta_json());
           }));

  srv.Get(R"(/exports/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            const auto ex = svc.load_export(req.matches[1]);
            json items = json::array();
            for (const auto& i : ex.items) items.push_back(i.to_json());
            auto body = ex.meta_json();
            body["items"] = std::move(items);
            send_json(res, 200, body);
          }));

  if (static_dir) srv.set_mount_point("/ui", static_dir->string());
}

CurationServer::~CurationServer() { stop(); }

int CurationServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::IoError, "cannot bind " + host + ":" + std::to_string(port));
  impl_->port = bound;
  return bound;
}

void CurationServer::listen() { impl_->server.listen_after_bind(); }

void CurationServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool CurationServer::running() const { return impl_->server.is_running(); }

}  // namespace derivmine::curation
