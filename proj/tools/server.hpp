#pragma once

#include "semcube/api.hpp"

namespace semcube::tools {

// Blocks until SIGINT/SIGTERM. Returns a process exit code.
int serve(api::Api& api, const std::string& host, int port);

}  // namespace semcube::tools
