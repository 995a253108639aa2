#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "derivmine/curation/service.hpp"

namespace derivmine::curation {

// HTTP status used for each error name in {code, message} bodies.
int http_status(Errc code) noexcept;

// JSON API over a CurationService:
//   GET  /queue/next?reviewer=..[&paper=..]   (or X-Reviewer-Id header)
//   POST /queue/enqueue                       {"sample_ids": [...]}
//   GET  /samples/{id}
//   POST /samples/{id}/decision               ReviewDecision body
//   GET  /samples/{id}/audit
//   POST /exports                             {"name", "policy", "k"?}
//   GET  /exports/{name}
//   GET  /healthz
// The review UI bundle, when given, is served under /ui/.
class CurationServer {
 public:
  explicit CurationServer(CurationService& service, std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~CurationServer();

  CurationServer(const CurationServer&) = delete;
  CurationServer& operator=(const CurationServer&) = delete;

  // Port 0 picks a free port. Returns the bound port; throws Error{IoError}.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called.
  void listen();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace derivmine::curation
