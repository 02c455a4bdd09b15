#include "storymem/errors.hpp"

namespace storymem {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Input: return "input";
        case ErrorKind::Invariant: return "invariant";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::BackendTransport: return "backend_transport";
        case ErrorKind::BackendAuth: return "backend_auth";
        case ErrorKind::BackendProtocol: return "backend_protocol";
        case ErrorKind::BackendBudget: return "backend_budget";
        case ErrorKind::CapacityOverflow: return "capacity_overflow";
        case ErrorKind::StoreVersion: return "store_version";
        case ErrorKind::StoreCorrupt: return "store_corrupt";
    }
    return "unknown";
}

} // namespace storymem
