"""Tiny job registry: renders that outlive the request timeout stay
pollable until fetched."""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor


class JobRegistry:
    def __init__(self, workers: int = 2):
        self.pool = ThreadPoolExecutor(max_workers=workers)
        self.jobs: dict = {}
        self.lock = threading.Lock()

    def submit(self, fn):
        job_id = uuid.uuid4().hex[:12]
        with self.lock:
            self.jobs[job_id] = {"state": "pending"}

        def run():
            try:
                result, content_type = fn()
                with self.lock:
                    self.jobs[job_id] = {"state": "done", "result": result,
                                         "content_type": content_type}
                return result, content_type
            except Exception as e:
                with self.lock:
                    self.jobs[job_id] = {"state": "error", "message": f"{type(e).__name__}: {e}"}
                raise

        future = self.pool.submit(run)
        return job_id, future

    def status(self, job_id: str):
        with self.lock:
            return self.jobs.get(job_id)
