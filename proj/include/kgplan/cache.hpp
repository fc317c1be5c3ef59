#pragma once

#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <string>

#include <json.hpp>

#include "kgplan/core.hpp"

namespace kgplan {

/// Keyed store persisted as append-friendly JSON lines, one record per key.
/// Reads are concurrent; writes are serialized and appended to the file.
/// A later record for the same key supersedes the earlier one on reload.
class JsonlCache {
public:
    using json = nlohmann::json;

    JsonlCache() = default;

    explicit JsonlCache(std::filesystem::path path) : path_(std::move(path)) {
        if (path_.empty() || !std::filesystem::exists(path_)) return;
        std::ifstream in(path_);
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            json rec = json::parse(line, nullptr, false);
            if (rec.is_discarded() || !rec.contains("key")) {
                log::warn("cache: skipping malformed line " + std::to_string(lineno) +
                          " in " + path_.string());
                continue;
            }
            entries_[rec.at("key").get<std::string>()] = rec;
        }
    }

    std::optional<json> get(const std::string& key) const {
        std::shared_lock lock(mutex_);
        auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    bool contains(const std::string& key) const {
        std::shared_lock lock(mutex_);
        return entries_.count(key) > 0;
    }

    void put(const std::string& key, json record) {
        record["key"] = key;
        std::unique_lock lock(mutex_);
        entries_[key] = record;
        if (path_.empty()) return;
        if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
        std::ofstream out(path_, std::ios::app);
        out << record.dump() << "\n";
    }

    size_t size() const {
        std::shared_lock lock(mutex_);
        return entries_.size();
    }

    void clear() {
        std::unique_lock lock(mutex_);
        entries_.clear();
        if (!path_.empty()) std::filesystem::remove(path_);
    }

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, json> entries_;
};

/// Serializes concurrent work per key: the first caller for a key runs the
/// job, latecomers for the same key wait and reuse the stored result check.
class SingleFlight {
public:
    /// Returns true if this caller owns the flight for `key` and must run
    /// the job, false after waiting for an owner to finish.
    bool acquire(const std::string& key) {
        std::unique_lock lock(mutex_);
        while (in_flight_.count(key)) {
            cv_.wait(lock);
            // Owner finished; the result should now be cached. Report
            // non-ownership so the caller re-checks the cache.
            if (!in_flight_.count(key)) return false;
        }
        in_flight_.insert(key);
        return true;
    }

    void release(const std::string& key) {
        {
            std::unique_lock lock(mutex_);
            in_flight_.erase(key);
        }
        cv_.notify_all();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::set<std::string> in_flight_;
};

}  // namespace kgplan
