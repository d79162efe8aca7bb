import argparse

import uvicorn

from .config import DEFAULT_TEMPLATE, ShimConfig
from .service import create_app


def main() -> None:
    parser = argparse.ArgumentParser(
        prog="frameref-shim",
        description="Serve teacher-forced label logprobs from a local causal LM",
    )
    parser.add_argument("--model", default="toy://0", help="toy://<seed> or a transformers model path/id")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8930)
    parser.add_argument("--template", default=DEFAULT_TEMPLATE)
    parser.add_argument("--max-batch", type=int, default=4)
    args = parser.parse_args()

    config = ShimConfig(
        model=args.model,
        host=args.host,
        port=args.port,
        template=args.template,
        max_batch=args.max_batch,
    )
    uvicorn.run(create_app(config), host=config.host, port=config.port)


if __name__ == "__main__":
    main()
