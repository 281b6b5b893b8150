"""
FastAPI Main Application for the Network Booster Planner
Exposes scenario runs, comparisons, sweeps and sensitivities over HTTP
"""

import logging
from contextlib import asynccontextmanager
from datetime import datetime, timezone

from fastapi import FastAPI, HTTPException, Request, status
from fastapi.responses import JSONResponse

from app.api.scenarios import router as scenarios_router
from app.api.sensitivities import router as sensitivities_router
from app.core.config import get_settings
from app.lp.backends import backend_factory

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

# Global settings
settings = get_settings()


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan manager"""
    logger.info(f"🚀 Starting {settings.app_name}...")
    logger.info(f"🔧 LP backend '{settings.solver_backend}', available: {backend_factory.available()}")
    logger.info(f"✅ {settings.app_name} started successfully!")

    yield

    logger.info(f"🛑 Shutting down {settings.app_name}...")
    logger.info("✅ Shutdown complete")


app = FastAPI(
    title=f"{settings.app_name} API",
    description="N-1 secure generation and network booster investment planning",
    version=settings.app_version,
    docs_url="/docs" if settings.environment == "development" else None,
    redoc_url="/redoc" if settings.environment == "development" else None,
    lifespan=lifespan
)

app.include_router(scenarios_router, prefix="/api/v1/scenarios", tags=["Scenarios"])
app.include_router(sensitivities_router, prefix="/api/v1/sensitivities", tags=["Sensitivities"])


@app.get("/health")
async def health_check():
    """Health check with solver backend availability"""
    try:
        backend = backend_factory.create_backend(settings.solver_backend)
    except Exception as e:
        logger.error(f"Health check failed: {e}")
        raise HTTPException(
            status_code=status.HTTP_503_SERVICE_UNAVAILABLE,
            detail="Solver backend unavailable"
        ) from e

    return {
        "status": "healthy",
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "version": settings.app_version,
        "environment": settings.environment,
        "solver": {
            "backend": backend.name,
            "available": backend_factory.available(),
        },
    }


@app.get("/")
async def root():
    """API root endpoint"""
    return {
        "message": f"Welcome to the {settings.app_name} API",
        "version": settings.app_version,
        "models": ["preventive", "sequential", "simultaneous"],
        "documentation": "/docs",
        "health": "/health"
    }


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    """Global exception handler for unhandled errors"""
    logger.error(f"Unhandled exception: {exc}", exc_info=True)

    return JSONResponse(
        status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
        content={
            "detail": "Internal server error",
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
    )


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(
        "app.main:app",
        host="0.0.0.0",
        port=8000,
        reload=settings.environment == "development",
        access_log=True,
        log_level=settings.log_level.lower()
    )
