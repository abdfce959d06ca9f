package org.eclipse.webdav.client;

public interface Locator {
    String getResourceURL();
}
