"""The event-by-event clustering consumer as a realistic workload.

Builds a stream of three spatial activity blobs, feeds it through the
full pipeline with the clustering consumer, and prints the clusters it
tracked. Unlike the synthetic consumer, processing time here is
measured wall time, so sizes adapt to the actual cost of clustering.
"""

import numpy as np

from asap_stream import (ClusteringConsumer, ConsumerConfig, PipelineConfig,
                         ArraySource, make_events, run)


def blob_stream(centers, events_per_blob=3000, duration_us=500_000, seed=0):
    rng = np.random.default_rng(seed)
    n = events_per_blob * len(centers)
    t = np.sort(rng.integers(0, duration_us, size=n))
    which = rng.integers(0, len(centers), size=n)
    cx = np.array([c[0] for c in centers])[which]
    cy = np.array([c[1] for c in centers])[which]
    x = np.clip(cx + rng.normal(0, 2, size=n), 0, 345).astype(int)
    y = np.clip(cy + rng.normal(0, 2, size=n), 0, 259).astype(int)
    p = rng.choice([-1, 1], size=n)
    return make_events(t, x, y, p)


def main():
    centers = [(60, 60), (170, 130), (290, 200)]
    events = blob_stream(centers)

    consumer = ClusteringConsumer(radius_px=10.0, ttl_us=10**9)
    config = PipelineConfig(consumer=ConsumerConfig(kind="clustering"))
    result = run(config, ArraySource(events), consumer=consumer)

    print(f"{len(events)} events in {len(result.metrics)} packages, "
          f"sizes {min(m.size for m in result.metrics)}"
          f"-{max(m.size for m in result.metrics)}")
    print(f"tracked {len(consumer.clusters)} clusters "
          f"(ground truth: {len(centers)} blobs):")
    for c in sorted(consumer.clusters, key=lambda c: -c.count):
        print(f"  centroid ({c.cx:6.1f}, {c.cy:6.1f})  events {c.count}")


if __name__ == "__main__":
    main()
