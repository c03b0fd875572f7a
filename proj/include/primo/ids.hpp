#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

namespace primo {

using PartitionId = std::uint16_t;

// Globally unique transaction identifier: the originating server's ordinal
// plus that server's local transaction counter.
//
// Ordering is (counter, server_id), not (server_id, counter): seniority then
// approximates arrival order across servers, which keeps WAIT_DIE fair when
// one server is busier than the rest. A smaller TransactionId is "senior".
struct TransactionId {
    std::uint32_t server = 0;
    std::uint64_t counter = 0;

    friend constexpr bool operator==(const TransactionId&, const TransactionId&) = default;
    friend constexpr std::strong_ordering operator<=>(const TransactionId& a, const TransactionId& b) {
        if (auto c = a.counter <=> b.counter; c != 0) return c;
        return a.server <=> b.server;
    }

    std::string str() const { return "T(" + std::to_string(server) + "," + std::to_string(counter) + ")"; }
};

constexpr bool senior_to(const TransactionId& a, const TransactionId& b) { return a < b; }

// Commit timestamp. The integer value drives every protocol comparison
// (TicToc constraints, watermarks); the tiebreak only disambiguates equal
// values where a total order is required (serial-order reconstruction).
// Independent of wall clock and of TransactionId ordering semantics.
struct LogicalTimestamp {
    std::uint64_t value = 0;
    TransactionId tiebreak{};

    friend constexpr bool operator==(const LogicalTimestamp&, const LogicalTimestamp&) = default;
    friend constexpr std::strong_ordering operator<=>(const LogicalTimestamp& a, const LogicalTimestamp& b) {
        if (auto c = a.value <=> b.value; c != 0) return c;
        return a.tiebreak <=> b.tiebreak;
    }

    std::string str() const {
        return std::to_string(value) + "@" + std::to_string(tiebreak.server) + "." +
               std::to_string(tiebreak.counter);
    }
};

// Record identifier. Partition ownership is part of the key so routing needs
// no directory; `id` is an opaque ordinal within the partition's keyspace.
struct Key {
    PartitionId partition = 0;
    std::uint64_t id = 0;

    friend constexpr bool operator==(const Key&, const Key&) = default;
    friend constexpr std::strong_ordering operator<=>(const Key& a, const Key& b) {
        if (auto c = a.partition <=> b.partition; c != 0) return c;
        return a.id <=> b.id;
    }

    std::string str() const { return "p" + std::to_string(partition) + "/k" + std::to_string(id); }
};

// Hands out the next TransactionId for a server. The counter is incremented
// by one per transaction, so the first id on server s is (s, 1).
inline TransactionId next_tid(std::uint32_t server_id, std::uint64_t& counter_state) {
    return TransactionId{server_id, ++counter_state};
}

}  // namespace primo

template <>
struct std::hash<primo::Key> {
    std::size_t operator()(const primo::Key& k) const noexcept {
        return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(k.partition) << 48) ^ k.id);
    }
};

template <>
struct std::hash<primo::TransactionId> {
    std::size_t operator()(const primo::TransactionId& t) const noexcept {
        return std::hash<std::uint64_t>{}(t.counter * 0x100000001b3ULL + t.server);
    }
};
