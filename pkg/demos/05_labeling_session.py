"""Drive the labeling session service end to end, in process.

Creates a session over a temporary synthetic benchmark, answers the first few
queries with oracle labels, undoes one, and prints the state payload the
browser console would render. The same flow works over the network via
``amselect serve``.
"""

import tempfile
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from amselect import SyntheticSpec, confusions_from_accuracies, generate_synthetic, save_benchmark
from amselect.service import create_app

workdir = Path(tempfile.mkdtemp(prefix="amselect-demo-"))
spec = SyntheticSpec(
    num_models=4,
    num_items=50,
    num_classes=3,
    true_confusions=confusions_from_accuracies([0.85, 0.7, 0.62, 0.55], 3),
    class_prevalence=np.full(3, 1.0 / 3.0),
    sharpness=15.0,
    seed=41,
)
task = generate_synthetic(spec)
manifest = save_benchmark(task, workdir / "bench", name="demo")
oracle = {task.item_ids[i]: int(task.oracle_labels[i]) for i in range(task.num_items)}

client = TestClient(create_app(workdir / "sessions"))
payload = client.post("/sessions", json={
    "manifest_path": str(manifest),
    "config": {"method": "eig", "grid_size": 513},
}).json()
sid = payload["session_id"]
print(f"session {sid[:8]} created; initial best-model belief:")
for model, p in zip(payload["model_ids"], payload["pbest"]):
    print(f"  {model}: {p:.3f}")

for step in range(1, 6):
    pending = payload["pending_query"]
    label = oracle[pending["item_id"]]
    payload = client.post(f"/sessions/{sid}/labels", json={
        "step": step,
        "item_id": pending["item_id"],
        "class_index": label,
    }).json()
    print(f"step {payload['step_count']}: labeled {pending['item_id']} as class {label}; "
          f"current pick {payload['chosen_model']['id']}")

print("\nundoing the last label...")
payload = client.post(f"/sessions/{sid}/undo").json()
print(f"step count is back to {payload['step_count']}, "
      f"pending query again {payload['pending_query']['item_id']}")

print("\nhistory export:")
print(client.get(f"/sessions/{sid}/export").text)
