export class ExtractorError extends Error {}

export class ModelUnavailable extends ExtractorError {}

export class AssetUnreadable extends ExtractorError {
  constructor(public readonly assetId: string, message: string) {
    super(message);
  }
}

export class ManifestError extends ExtractorError {}
