#pragma once
#include "storymem/backends.hpp"
#include "storymem/config.hpp"

#include <memory>

namespace storymem {

// Chat-completion client against RemoteEndpointConfig.base_url. Transport
// failures and 5xx responses retry with jittered exponential backoff up to
// max_retries; auth rejections and malformed bodies fail immediately with
// their own error kinds. The API key is read from the environment variable
// named in the config, never from the config file itself.
std::unique_ptr<TextGenerator> remote_generator(const RemoteEndpointConfig& config);

} // namespace storymem
