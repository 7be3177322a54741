"""Frame-by-frame re-identification engine: ghost gate + matcher + gallery."""
from .config import EngineConfig
from .gallery import Gallery
from .matcher import UNKNOWN, Assignment, PendingPool, assign_frame
from .preprocess import GhostFilter


class Engine:
    """Stateful wrapper that owns one gallery, pending pool and ghost filter.

    With ``frozen=True`` the gallery is only read: matched probes are not
    stored and unmatched probes come back unknown.
    """

    def __init__(self, config: EngineConfig = None, gallery: Gallery = None, frozen=False):
        self.config = config or EngineConfig()
        self.match_config = self.config.match_config()
        self.gallery = gallery if gallery is not None else Gallery(self.config.gallery_config())
        self.pool = PendingPool(capacity=self.config.s2)
        self.ghosts = GhostFilter(self.config.ghost_min_frames)
        self.bindings = {}
        self.frozen = frozen
        self.frames_seen = 0

    def process(self, batch):
        admitted = self.ghosts.update(batch.frame_index, [o.track_id for o in batch.observations])
        live = [o for o in batch.observations if admitted[o.track_id]]
        suppressed = {
            o.track_id: Assignment(batch.frame_index, o.track_id, UNKNOWN, ghost_suppressed=True)
            for o in batch.observations
            if not admitted[o.track_id]
        }
        if len(live) != len(batch.observations):
            batch = type(batch)(batch.frame_index, tuple(live))
        assigned = assign_frame(
            batch, self.gallery, self.pool, self.match_config,
            bindings=self.bindings, update=not self.frozen,
        )
        self.frames_seen += 1
        n = self.config.enforce_every_n_frames
        if n > 1 and self.frames_seen % n == 0:
            self.gallery.enforce_limits()
        out = {a.track: a for a in assigned}
        out.update(suppressed)
        return [out[t] for t in sorted(out)]

    def run(self, batches):
        results = []
        for batch in batches:
            results.extend(self.process(batch))
        return results
