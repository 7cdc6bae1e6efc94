import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

interface Call {
  url: string;
  init?: RequestInit;
}

function clientWith(
  responder: (url: string, init?: RequestInit) => Response | Promise<Response>,
): { client: ApiClient; calls: Call[] } {
  const calls: Call[] = [];
  const client = new ApiClient("/api/v1", async (url, init) => {
    calls.push({ url, init });
    return responder(url, init);
  });
  return { client, calls };
}

describe("ApiClient", () => {
  it("fetches session info", async () => {
    const { client, calls } = clientWith(() =>
      jsonResponse({
        id: "s1",
        kind: "lexical_selection",
        annotator_ids: ["a"],
        total_tasks: 3,
      }),
    );
    const info = await client.session();
    expect(info.total_tasks).toBe(3);
    expect(calls[0].url).toBe("/api/v1/session");
  });

  it("returns null on 204 from tasks/next", async () => {
    const { client, calls } = clientWith(
      () => new Response(null, { status: 204 }),
    );
    expect(await client.nextTask("ann a")).toBeNull();
    expect(calls[0].url).toBe("/api/v1/tasks/next?annotator=ann+a");
  });

  it("parses a task from tasks/next", async () => {
    const task = {
      id: "t::a",
      kind: "lexical_selection",
      payload: { candidates: ["x", "y"] },
      annotator_id: "a",
      presentation_seed: 1,
    };
    const { client } = clientWith(() => jsonResponse(task));
    const got = await client.nextTask("a");
    expect(got?.id).toBe("t::a");
  });

  it("posts judgments as JSON", async () => {
    const { client, calls } = clientWith(() =>
      jsonResponse({ task_id: "t", annotator_id: "a", value: "x" }, 201),
    );
    await client.submit({ task_id: "t", annotator_id: "a", value: "x" });
    expect(calls[0].url).toBe("/api/v1/judgments");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      task_id: "t",
      annotator_id: "a",
      value: "x",
    });
  });

  it("raises ApiError with the status on 5xx", async () => {
    const { client } = clientWith(() => jsonResponse({ detail: "boom" }, 500));
    const err = await client
      .submit({ task_id: "t", annotator_id: "a", value: "x" })
      .catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(500);
  });

  it("wraps network failures with a null status", async () => {
    const { client } = clientWith(() => {
      throw new TypeError("fetch failed");
    });
    const err = await client.session().catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBeNull();
  });

  it("strips a trailing slash from the base", async () => {
    const calls: string[] = [];
    const client = new ApiClient("http://h:1/api/v1/", async (url) => {
      calls.push(url);
      return jsonResponse({ done: 0, total: 1 });
    });
    await client.progress("a");
    expect(calls[0]).toBe("http://h:1/api/v1/progress?annotator=a");
  });
});
