#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "derivmine/agentflow/provider.hpp"
#include "derivmine/core/clock.hpp"
#include "derivmine/core/error.hpp"

namespace derivmine::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitStageError = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;

int exit_code_for(Errc code) noexcept;

using ProviderFactory = std::function<std::unique_ptr<agentflow::Provider>(const agentflow::ProviderBinding&)>;

struct Context {
  std::ostream& out;
  std::ostream& err;
  Clock& clock;
  const CancelToken* cancel = nullptr;
  // Replaces make_provider, so tests can count calls.
  ProviderFactory provider_factory;
  // serve: called with the bound port once listening starts.
  std::function<void(int)> on_listening;
};

// argv without the program name.
int dispatch(const std::vector<std::string>& args, Context& ctx);

}  // namespace derivmine::cli
