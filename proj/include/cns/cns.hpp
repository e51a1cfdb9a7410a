#pragma once

/// cns — a local-first hybrid event fabric.
///
/// Layers, bottom up:
///   event_key / event        typed event identity and envelope
///   subject_matcher           NATS-style wildcard subject matching
///   serde_registry            per-family serialization + validation
///   local_context             in-process publish/subscribe (two queues)
///   transport / loopback / nats_transport
///                             subject transports behind one adapter
///   distributed_context       header-enriched transport messaging
///   bridge                    local <-> distributed transfer loops
///   family_registry           project-level event family specialization
///   stats / bench             measurement harness

#include "cns/bounded_queue.hpp"
#include "cns/bridge.hpp"
#include "cns/clock.hpp"
#include "cns/distributed_context.hpp"
#include "cns/errors.hpp"
#include "cns/event.hpp"
#include "cns/event_key.hpp"
#include "cns/family_registry.hpp"
#include "cns/local_context.hpp"
#include "cns/logging.hpp"
#include "cns/loopback_transport.hpp"
#include "cns/nats_transport.hpp"
#include "cns/serde_registry.hpp"
#include "cns/stats.hpp"
#include "cns/subject_matcher.hpp"
#include "cns/transport.hpp"
