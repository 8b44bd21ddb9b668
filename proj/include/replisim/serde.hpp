#pragma once

// JSON bindings for durable records: write-log payloads, cleanup backups,
// store snapshots. Field order is fixed by nlohmann's sorted object keys, so
// serialized output is stable across runs.

#include <json.hpp>

#include "replisim/records.hpp"

namespace replisim {

using Json = nlohmann::json;

void to_json(Json& j, const TokenBundle& t);
void from_json(const Json& j, TokenBundle& t);

void to_json(Json& j, const StateChange& s);
void from_json(const Json& j, StateChange& s);

void to_json(Json& j, const ChannelRecord& c);
void from_json(const Json& j, ChannelRecord& c);

void to_json(Json& j, const VideoRecord& v);
void from_json(const Json& j, VideoRecord& v);

void to_json(Json& j, const UserRecord& u);
void from_json(const Json& j, UserRecord& u);

void to_json(Json& j, const StatsRecord& s);
void from_json(const Json& j, StatsRecord& s);

void to_json(Json& j, const WhitelistRecord& w);
void from_json(const Json& j, WhitelistRecord& w);

}  // namespace replisim
