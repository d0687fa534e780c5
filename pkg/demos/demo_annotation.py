"""Spin up the annotation service, drive it with a scripted annotator, and
print the merged human aggregates."""

import requests

from commentart.annotation import ResponseStore, merge_human_responses, serve_annotation
from commentart.dataset import Comment, VideoRecord
from commentart.tasks import SELECTION_1_1_1, build_ranking, build_selection


def record(video_id, god_likes=100, high_likes=(40, 30, 20, 10), ordinaries=2):
    comments = [Comment(f"{video_id}-g", "the god comment", god_likes, "god")]
    comments += [
        Comment(f"{video_id}-h{i}", f"high comment {i}", likes, "high")
        for i, likes in enumerate(high_likes)
    ]
    comments += [
        Comment(f"{video_id}-o{i}", f"ordinary comment {i}", 1, "ordinary")
        for i in range(ordinaries)
    ]
    return VideoRecord(
        video_id=video_id, title=f"video {video_id}", category="Comedy", comments=tuple(comments)
    )


tasks = [
    build_selection(record("v1"), SELECTION_1_1_1, seed=1),
    build_ranking(record("v2"), seed=2),
]
store = ResponseStore()
server = serve_annotation(("127.0.0.1", 0), tasks, store, seed=42)
host, port = server.address
base = f"http://{host}:{port}"
print(f"service listening on {base}")

try:
    while True:
        body = requests.get(f"{base}/api/tasks/next", params={"annotator": "demo"}).json()
        if body["done"]:
            print("annotator finished all tasks")
            break
        task = body["task"]
        labels = [o[0] for o in task["options"]]
        print(f"dispensed {task['task_id']} ({task['kind']}), options {labels}")
        if task["kind"] == "selection":
            payload = {"label": labels[0]}
        else:
            payload = {"permutation": labels}
        posted = requests.post(
            f"{base}/api/responses",
            json={"annotator_id": "demo", "task_id": task["task_id"], "payload": payload},
        )
        print(f"  submitted -> {posted.status_code}, progress {posted.json().get('completed')}")

    merged = merge_human_responses(store, tasks)
    print("merged human aggregates:")
    for kind, agg in merged.aggregates.items():
        if kind != "per_annotator":
            print(f"  {kind}: {agg}")
finally:
    server.shutdown()
