#pragma once

#include <set>
#include <string>
#include <variant>
#include <vector>

#include "primo/ids.hpp"
#include "primo/record.hpp"

namespace primo {

// Transaction programs are small command lists interpreted by the engines.
// Keeping them as data (rather than native closures) lets a failing seed be
// dumped and replayed. OpBranchWrite makes the write-set depend on a prior
// read, which is what rules out protocols that need read/write sets up
// front.

struct OpRead {
    Key key;
};

struct OpWrite {
    Key key;
    Value value;
};

// Writes `value` to one of two keys depending on the parity of the last read
// value's length+bytes.
struct OpBranchWrite {
    Key if_even;
    Key if_odd;
    Value value;
};

using Command = std::variant<OpRead, OpWrite, OpBranchWrite>;

struct Program {
    PartitionId home = 0;
    std::vector<Command> cmds;

    std::set<PartitionId> partitions() const {
        std::set<PartitionId> out;
        for (const Command& c : cmds) {
            if (const auto* r = std::get_if<OpRead>(&c)) out.insert(r->key.partition);
            else if (const auto* w = std::get_if<OpWrite>(&c)) out.insert(w->key.partition);
            else {
                const auto& b = std::get<OpBranchWrite>(c);
                out.insert(b.if_even.partition);
                out.insert(b.if_odd.partition);
            }
        }
        return out;
    }

    bool touches_remote() const {
        for (PartitionId p : partitions())
            if (p != home) return true;
        return false;
    }

    std::string to_text() const {
        std::string out = "home " + std::to_string(home) + "\n";
        for (const Command& c : cmds) {
            if (const auto* r = std::get_if<OpRead>(&c)) {
                out += "R " + r->key.str() + "\n";
            } else if (const auto* w = std::get_if<OpWrite>(&c)) {
                out += "W " + w->key.str() + " " + w->value + "\n";
            } else {
                const auto& b = std::get<OpBranchWrite>(c);
                out += "BR " + b.if_even.str() + " " + b.if_odd.str() + " " + b.value + "\n";
            }
        }
        return out;
    }
};

}  // namespace primo
