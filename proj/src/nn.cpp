#include "seqdet/nn/net.hpp"

#include <stdexcept>

namespace seqdet::nn {

std::string to_string(CellKind k) {
    switch (k) {
        case CellKind::Vanilla: return "vanilla";
        case CellKind::Gru: return "gru";
        case CellKind::Lstm: return "lstm";
    }
    return "?";
}

std::string to_string(NetKind k) {
    switch (k) {
        case NetKind::Dense: return "dense";
        case NetKind::Recurrent: return "recurrent";
        case NetKind::Bidirectional: return "bidirectional";
    }
    return "?";
}

CellKind cell_kind_from_string(const std::string& s) {
    if (s == "vanilla") return CellKind::Vanilla;
    if (s == "gru") return CellKind::Gru;
    if (s == "lstm") return CellKind::Lstm;
    throw std::invalid_argument("unknown cell kind: " + s);
}

}  // namespace seqdet::nn
